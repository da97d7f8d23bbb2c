//! Content-addressed score cache. The key covers the text bytes, the backend
//! identity, the method, and its parameters, so a hit is only possible when
//! every input to the score is identical.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scoring::Method;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CachedScore {
    pub value: f64,
    pub method: Method,
    pub nu: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScoreCache {
    root: PathBuf,
}

impl ScoreCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn key(text: &str, backend_id: &str, method: Method, nu: Option<f64>) -> String {
        let mut hasher = Sha256::new();
        hasher.update((text.len() as u64).to_le_bytes());
        hasher.update(text.as_bytes());
        hasher.update((backend_id.len() as u64).to_le_bytes());
        hasher.update(backend_id.as_bytes());
        hasher.update(method.as_str().as_bytes());
        if let Some(nu) = nu {
            hasher.update(nu.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.root.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<CachedScore> {
        let bytes = std::fs::read(self.path_for(key)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    pub fn put(&self, key: &str, score: &CachedScore) -> std::io::Result<()> {
        let path = self.path_for(key);
        let dir = path.parent().expect("cache path has parent");
        std::fs::create_dir_all(dir)?;
        // Write-then-rename so a concurrent reader never sees a torn file.
        let tmp = dir.join(format!(".{}.tmp", std::process::id()));
        std::fs::write(&tmp, serde_json::to_vec(score).expect("serializable"))?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}
