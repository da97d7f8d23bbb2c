//! Per-position scoring statistics from a scoring/reference language-model
//! pair.
//!
//! A backend turns a text into one [`PositionStats`] per token: the observed
//! token's log-probability under the scoring model, plus the mean and variance
//! of the scoring model's log-probabilities under the reference distribution
//! at that position. Two backends ship: a deterministic character n-gram model
//! for hermetic tests, and an HTTP client for real language models.

mod remote;
mod toy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use remote::{RemoteBackend, RemoteConfig, TokenStatsRequest, TokenStatsResponse, WireToken};
pub use toy::{ToyBackendPair, ToyNgramModel, CHAR_TOKENIZER_ID, OOV_TOKEN, VOCAB_SIZE};

/// Token cap applied to every input text.
pub const MAX_TOKENS: usize = 512;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("input text is empty or whitespace-only")]
    EmptyInput,
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order {0} outside supported range [1, 4]")]
    InvalidOrder(usize),
    #[error("smoothing must be positive, got {0}")]
    InvalidSmoothing(f64),
    #[error("scoring and reference models use different tokenizers: {0} vs {1}")]
    TokenizerMismatch(String, String),
    #[error("remote backend error: {message} (retryable: {retryable}, attempts: {attempts})")]
    Remote {
        message: String,
        retryable: bool,
        attempts: u32,
    },
    #[error("protocol violation: {0}")]
    Protocol(String),
}

/// Statistics for a single token position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionStats {
    /// 0-based token position.
    pub token_index: usize,
    /// Natural-log probability of the observed token under the scoring model.
    pub logp_observed: f64,
    /// Expected scoring-model log-probability under the reference
    /// distribution at this position (nats).
    pub mu_ref: f64,
    /// Variance of the scoring-model log-probability under the reference
    /// distribution (nats squared).
    pub var_ref: f64,
}

/// Ordered per-token statistics for one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScoreSeries {
    pub positions: Vec<PositionStats>,
    pub token_count: usize,
    /// Identifies the backend and model pair that produced the series.
    pub backend_id: String,
    /// True when the token cap truncated the input.
    pub truncated: bool,
}

impl TokenScoreSeries {
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    ToyNgram,
    Remote,
}

/// Describes a backend + model pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    pub model_name: String,
    pub vocabulary_size: usize,
    pub deterministic: bool,
}

/// A source of per-position scoring statistics.
///
/// Implementations are immutable after construction and safe to share across
/// threads; `score_text` is pure with respect to backend state.
pub trait ScoreBackend: Send + Sync {
    fn descriptor(&self) -> &BackendDescriptor;

    /// Scores `text`, producing one `PositionStats` per token up to
    /// [`MAX_TOKENS`].
    fn score_text(&self, text: &str) -> Result<TokenScoreSeries, BackendError>;
}
