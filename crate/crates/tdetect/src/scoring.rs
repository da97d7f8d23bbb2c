//! Detector scores over a token-score series.
//!
//! The raw discrepancy sums the centered observed log-probabilities and the
//! per-position reference variances. The Gaussian detector divides by
//! `sqrt(v)`; the t-normalized detector divides by `sqrt(nu/(nu-2) * v)`,
//! which accounts for the inflated dispersion of heavy-tailed score
//! distributions and converges to the Gaussian score as `nu` grows. The
//! cross-perplexity ratio detector is included as a baseline.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, ScoreBackend, TokenScoreSeries};

/// Default degrees of freedom for the t-normalized detector.
pub const DEFAULT_NU: f64 = 5.0;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("series is empty")]
    EmptyInput,
    #[error("aggregated variance is zero; score undefined")]
    DegenerateVariance,
    #[error("nu must exceed 2, got {0}")]
    InvalidNu(f64),
    #[error("cross-entropy is zero; perplexity ratio undefined")]
    DegenerateCrossEntropy,
    #[error("series mismatch: lengths {0} and {1}")]
    SeriesMismatch(usize, usize),
    #[error("method '{0}' is not a single-series detector")]
    UnsupportedMethod(&'static str),
}

/// Backend or scoring failure from the combined score pipeline.
#[derive(Debug, Error)]
pub enum DetectError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// Unnormalized discrepancy and aggregated variance for one text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    /// Summed centered log-probability (nats).
    pub d: f64,
    /// Aggregated variance (nats squared).
    pub v: f64,
    pub token_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gaussian,
    TDetect,
    Binoculars,
    Ct,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Gaussian => "gaussian",
            Method::TDetect => "t_detect",
            Method::Binoculars => "binoculars",
            Method::Ct => "ct",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(Method::Gaussian),
            "t_detect" => Ok(Method::TDetect),
            "binoculars" => Ok(Method::Binoculars),
            "ct" => Ok(Method::Ct),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

/// A scalar detection score with its producing method and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub value: f64,
    pub method: Method,
    /// Degrees of freedom; present iff method is `t_detect`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Wall time of the producing pipeline stage, in seconds.
    pub elapsed_seconds: f64,
}

/// Average per-token negative log-probabilities for the perplexity-ratio
/// detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerplexityPair {
    /// Average negative observed-token log-probability under the performer
    /// (nats/token).
    pub log_ppl: f64,
    /// Average cross-entropy of performer log-probabilities under the
    /// observer distribution (nats/token).
    pub x_log_ppl: f64,
}

/// Sums the centered log-probabilities and per-position variances,
/// left-to-right in token order.
pub fn discrepancy(series: &TokenScoreSeries) -> Result<Discrepancy, ScoreError> {
    if series.positions.is_empty() {
        return Err(ScoreError::EmptyInput);
    }
    let mut d = 0.0;
    let mut v = 0.0;
    for pos in &series.positions {
        d += pos.logp_observed - pos.mu_ref;
        v += pos.var_ref;
    }
    Ok(Discrepancy {
        d,
        v,
        token_count: series.positions.len(),
    })
}

/// Standard z-score normalization: `d / sqrt(v)`.
pub fn gaussian_score(disc: &Discrepancy) -> Result<DetectionScore, ScoreError> {
    if disc.v <= 0.0 {
        return Err(ScoreError::DegenerateVariance);
    }
    Ok(DetectionScore {
        value: disc.d / disc.v.sqrt(),
        method: Method::Gaussian,
        nu: None,
        elapsed_seconds: 0.0,
    })
}

/// Heavy-tailed normalization: `d / sqrt(nu/(nu-2) * v)`.
///
/// `nu/(nu-2)` is the variance of a standard Student-t with `nu` degrees of
/// freedom, defined only for `nu > 2`.
pub fn t_detect_score(disc: &Discrepancy, nu: f64) -> Result<DetectionScore, ScoreError> {
    if nu.is_nan() || nu <= 2.0 {
        return Err(ScoreError::InvalidNu(nu));
    }
    if disc.v <= 0.0 {
        return Err(ScoreError::DegenerateVariance);
    }
    // Evaluated as the z-score times sqrt((nu-2)/nu) so the relation to the
    // Gaussian normalization holds to the last bit for any nu.
    let value = (disc.d / disc.v.sqrt()) * ((nu - 2.0) / nu).sqrt();
    Ok(DetectionScore {
        value,
        method: Method::TDetect,
        nu: Some(nu),
        elapsed_seconds: 0.0,
    })
}

/// Averages the observed and expected performer log-probabilities.
pub fn perplexity_pair(
    observed_performer: &TokenScoreSeries,
    cross: &TokenScoreSeries,
) -> Result<PerplexityPair, ScoreError> {
    if observed_performer.positions.is_empty() || cross.positions.is_empty() {
        return Err(ScoreError::EmptyInput);
    }
    if observed_performer.token_count != cross.token_count {
        return Err(ScoreError::SeriesMismatch(
            observed_performer.token_count,
            cross.token_count,
        ));
    }
    let n = observed_performer.token_count as f64;
    let log_ppl = -observed_performer
        .positions
        .iter()
        .map(|p| p.logp_observed)
        .sum::<f64>()
        / n;
    let x_log_ppl = -cross.positions.iter().map(|p| p.mu_ref).sum::<f64>() / n;
    Ok(PerplexityPair { log_ppl, x_log_ppl })
}

/// Perplexity-ratio baseline: performer log-perplexity over observer-performer
/// cross log-perplexity.
///
/// `observed_performer` must carry the performer as its scoring model;
/// `cross` must carry the performer as scoring and the observer as reference.
/// The log-domain ratio equals the exponentiated-perplexity ratio and avoids
/// overflow.
pub fn binoculars_score(
    observed_performer: &TokenScoreSeries,
    cross: &TokenScoreSeries,
) -> Result<DetectionScore, ScoreError> {
    let pair = perplexity_pair(observed_performer, cross)?;
    if pair.x_log_ppl == 0.0 {
        return Err(ScoreError::DegenerateCrossEntropy);
    }
    Ok(DetectionScore {
        value: pair.log_ppl / pair.x_log_ppl,
        method: Method::Binoculars,
        nu: None,
        elapsed_seconds: 0.0,
    })
}

/// Runs the full pipeline for one text: backend scoring statistics, then the
/// requested detector. `elapsed_seconds` covers the whole call.
///
/// For the perplexity-ratio method the backend pair must carry the performer
/// as its scoring model and the observer as its reference; one series then
/// supplies both averages.
pub fn score_with_backend(
    backend: &dyn ScoreBackend,
    text: &str,
    method: Method,
    nu: f64,
) -> Result<DetectionScore, DetectError> {
    let start = Instant::now();
    let series = backend.score_text(text)?;
    let mut score = match method {
        Method::Gaussian => gaussian_score(&discrepancy(&series)?)?,
        Method::TDetect => t_detect_score(&discrepancy(&series)?, nu)?,
        Method::Binoculars => binoculars_score(&series, &series)?,
        Method::Ct => return Err(ScoreError::UnsupportedMethod("ct").into()),
    };
    score.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(score)
}
