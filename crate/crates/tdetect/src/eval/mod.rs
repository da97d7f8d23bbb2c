//! Evaluation harness: corpus ingestion, stratified dev/eval splitting,
//! threshold fitting, AUROC / F1 / TPR@5%FPR metrics, score caching, and
//! report assembly.

mod benchmark;
mod cache;
mod metrics;

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use benchmark::{run_benchmark, BenchmarkConfig, GroupMetrics, MetricsReport};
pub use cache::{CachedScore, ScoreCache};
pub use metrics::{
    auroc, f1, fit_threshold_f1, timing_stats, tpr_at_fpr, ThresholdFit, TimingSummary,
};

use crate::scoring::DetectError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ingest error at line {line}: {message}")]
    Ingest { line: usize, message: String },
    #[error("scores contain a single class; metric undefined")]
    DegenerateLabels,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("stratum '{0}' has fewer than 2 records; cannot produce non-empty splits")]
    DegenerateSplit(String),
    #[error("dev fraction {0} outside (0, 1)")]
    InvalidDevFraction(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Ct(#[from] Box<crate::ct::CtError>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Human,
    Machine,
}

/// One corpus row, as ingested from JSONL.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub domain: String,
    #[serde(default = "default_attack")]
    pub attack: String,
    #[serde(default = "default_generator")]
    pub generator: String,
}

fn default_attack() -> String {
    "none".to_string()
}

fn default_generator() -> String {
    "unknown".to_string()
}

#[derive(Debug, Clone)]
pub struct LabeledCorpus {
    pub records: Vec<CorpusRecord>,
}

/// Parses and validates a JSONL corpus; the first violation is reported with
/// its line number.
pub fn load_corpus(path: &Path) -> Result<LabeledCorpus, EvalError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    parse_corpus(reader)
}

pub fn parse_corpus<R: BufRead>(reader: R) -> Result<LabeledCorpus, EvalError> {
    let mut records = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord =
            serde_json::from_str(&line).map_err(|e| EvalError::Ingest {
                line: line_no,
                message: e.to_string(),
            })?;
        if record.text.trim().is_empty() {
            return Err(EvalError::Ingest {
                line: line_no,
                message: format!("empty text for id '{}'", record.id),
            });
        }
        if !seen_ids.insert(record.id.clone()) {
            return Err(EvalError::Ingest {
                line: line_no,
                message: format!("duplicate id '{}'", record.id),
            });
        }
        records.push(record);
    }
    Ok(LabeledCorpus { records })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratifyKey {
    Label,
    Domain,
    Attack,
}

/// Deterministic stratified split specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub dev_fraction: f64,
    pub seed: u64,
    pub stratify_by: Vec<StratifyKey>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        // Convention: the split proportions are not published anywhere.
        Self {
            dev_fraction: 0.3,
            seed: 0,
            stratify_by: vec![StratifyKey::Label, StratifyKey::Domain],
        }
    }
}

/// Index split into (dev, eval); both halves non-empty for every stratum.
pub fn split_corpus(
    corpus: &LabeledCorpus,
    spec: &SplitSpec,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(spec.dev_fraction > 0.0 && spec.dev_fraction < 1.0) {
        return Err(EvalError::InvalidDevFraction(spec.dev_fraction));
    }
    let mut strata: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, rec) in corpus.records.iter().enumerate() {
        let mut key = String::new();
        for field in &spec.stratify_by {
            let part = match field {
                StratifyKey::Label => match rec.label {
                    Label::Human => "human",
                    Label::Machine => "machine",
                },
                StratifyKey::Domain => rec.domain.as_str(),
                StratifyKey::Attack => rec.attack.as_str(),
            };
            key.push_str(part);
            key.push('|');
        }
        strata.entry(key).or_default().push(i);
    }

    let mut dev = Vec::new();
    let mut eval = Vec::new();
    for (key, mut indices) in strata {
        if indices.len() < 2 {
            return Err(EvalError::DegenerateSplit(key));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ stratum_seed(&key));
        indices.shuffle(&mut rng);
        let n_dev = ((indices.len() as f64 * spec.dev_fraction).round() as usize)
            .clamp(1, indices.len() - 1);
        dev.extend_from_slice(&indices[..n_dev]);
        eval.extend_from_slice(&indices[n_dev..]);
    }
    dev.sort_unstable();
    eval.sort_unstable();
    Ok((dev, eval))
}

fn stratum_seed(key: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(key.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
