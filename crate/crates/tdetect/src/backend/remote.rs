//! HTTP client backend speaking the token-stats wire protocol.
//!
//! `POST {endpoint}/v1/token-stats` with a JSON body naming the scoring and
//! reference models; the server answers with per-position moments. Responses
//! are validated against the series invariants and rejected on any deviation,
//! never silently repaired.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{
    BackendDescriptor, BackendError, BackendKind, PositionStats, ScoreBackend, TokenScoreSeries,
    MAX_TOKENS,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenStatsRequest {
    pub model_scoring: String,
    pub model_reference: String,
    pub text: String,
    pub max_tokens: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireToken {
    pub i: usize,
    pub logp_observed: f64,
    pub mu_ref: f64,
    pub var_ref: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenStatsResponse {
    pub tokens: Vec<WireToken>,
    pub truncated: bool,
    /// Declared token count; must match `tokens.len()` when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub token_count: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model_scoring: String,
    pub model_reference: String,
    /// Upper bound on concurrent in-flight requests.
    pub max_in_flight: usize,
    pub timeout: Duration,
    pub vocabulary_size: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: &str, model_scoring: &str, model_reference: &str) -> Self {
        Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model_scoring: model_scoring.to_string(),
            model_reference: model_reference.to_string(),
            max_in_flight: 8,
            timeout: Duration::from_secs(30),
            vocabulary_size: 2,
        }
    }
}

/// Remote scoring backend. Immutable after construction; the underlying HTTP
/// client supports concurrent in-flight requests.
pub struct RemoteBackend {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
    descriptor: BackendDescriptor,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .pool_max_idle_per_host(config.max_in_flight)
            .build()
            .map_err(|e| BackendError::Remote {
                message: e.to_string(),
                retryable: false,
                attempts: 0,
            })?;
        let descriptor = BackendDescriptor {
            kind: BackendKind::Remote,
            model_name: format!("{}+{}", config.model_scoring, config.model_reference),
            vocabulary_size: config.vocabulary_size,
            deterministic: false,
        };
        Ok(Self {
            config,
            client,
            descriptor,
        })
    }

    pub fn max_in_flight(&self) -> usize {
        self.config.max_in_flight
    }

    /// Validates a wire response and converts it into a series.
    ///
    /// Public so the protocol checks can be exercised without a live server.
    pub fn validate_response(
        &self,
        response: TokenStatsResponse,
    ) -> Result<TokenScoreSeries, BackendError> {
        validate_response(response, &self.descriptor.model_name)
    }
}

pub(crate) fn validate_response(
    response: TokenStatsResponse,
    backend_id: &str,
) -> Result<TokenScoreSeries, BackendError> {
    if let Some(declared) = response.token_count {
        if declared != response.tokens.len() {
            return Err(BackendError::Protocol(format!(
                "token_count {} does not match {} tokens in response",
                declared,
                response.tokens.len()
            )));
        }
    }
    if response.tokens.is_empty() {
        return Err(BackendError::Protocol("response contains no tokens".into()));
    }
    if response.tokens.len() > MAX_TOKENS {
        return Err(BackendError::Protocol(format!(
            "response has {} tokens, exceeding the {MAX_TOKENS}-token cap",
            response.tokens.len()
        )));
    }
    let mut positions = Vec::with_capacity(response.tokens.len());
    for (expect_i, tok) in response.tokens.iter().enumerate() {
        if tok.i != expect_i {
            return Err(BackendError::Protocol(format!(
                "token index {} at array position {expect_i}",
                tok.i
            )));
        }
        if !tok.var_ref.is_finite() || tok.var_ref < 0.0 {
            return Err(BackendError::Protocol(format!(
                "var_ref negative at index {expect_i}: {}",
                tok.var_ref
            )));
        }
        if !tok.logp_observed.is_finite() || tok.logp_observed > 0.0 {
            return Err(BackendError::Protocol(format!(
                "logp_observed positive at index {expect_i}: {}",
                tok.logp_observed
            )));
        }
        if !tok.mu_ref.is_finite() || tok.mu_ref > 0.0 {
            return Err(BackendError::Protocol(format!(
                "mu_ref positive at index {expect_i}: {}",
                tok.mu_ref
            )));
        }
        positions.push(PositionStats {
            token_index: tok.i,
            logp_observed: tok.logp_observed,
            mu_ref: tok.mu_ref,
            var_ref: tok.var_ref,
        });
    }
    Ok(TokenScoreSeries {
        token_count: positions.len(),
        positions,
        backend_id: backend_id.to_string(),
        truncated: response.truncated,
    })
}

impl ScoreBackend for RemoteBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn score_text(&self, text: &str) -> Result<TokenScoreSeries, BackendError> {
        if text.trim().is_empty() {
            return Err(BackendError::EmptyInput);
        }
        let request = TokenStatsRequest {
            model_scoring: self.config.model_scoring.clone(),
            model_reference: self.config.model_reference.clone(),
            text: text.to_string(),
            max_tokens: MAX_TOKENS,
        };
        let url = format!("{}/v1/token-stats", self.config.endpoint);
        let response = self
            .client
            .post(&url)
            .json(&request)
            .send()
            .map_err(|e| BackendError::Remote {
                message: format!("request to {url} failed: {e}"),
                retryable: e.is_timeout() || e.is_connect(),
                attempts: 1,
            })?;
        let status = response.status();
        if !status.is_success() {
            return Err(BackendError::Remote {
                message: format!("{url} returned status {status}"),
                retryable: status.is_server_error(),
                attempts: 1,
            });
        }
        let body: TokenStatsResponse = response.json().map_err(|e| {
            BackendError::Protocol(format!("response body does not match schema: {e}"))
        })?;
        self.validate_response(body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn token(i: usize, logp: f64, mu: f64, var: f64) -> WireToken {
        WireToken {
            i,
            logp_observed: logp,
            mu_ref: mu,
            var_ref: var,
        }
    }

    #[test]
    fn well_formed_response_passes_through() {
        let resp = TokenStatsResponse {
            tokens: vec![
                token(0, -1.0, -2.0, 0.5),
                token(1, -0.5, -1.5, 0.25),
                token(2, -3.0, -2.5, 1.0),
            ],
            truncated: false,
            token_count: Some(3),
        };
        let series = validate_response(resp, "remote-test").unwrap();
        assert_eq!(series.token_count, 3);
        assert_eq!(series.positions[2].var_ref, 1.0);
        assert!(!series.truncated);
    }

    #[test]
    fn negative_variance_rejected() {
        let resp = TokenStatsResponse {
            tokens: vec![token(0, -1.0, -2.0, -0.1)],
            truncated: false,
            token_count: None,
        };
        let err = validate_response(resp, "remote-test").unwrap_err();
        match err {
            BackendError::Protocol(msg) => assert!(msg.contains("var_ref negative at index 0")),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn mismatched_token_count_rejected() {
        let resp = TokenStatsResponse {
            tokens: vec![token(0, -1.0, -2.0, 0.5)],
            truncated: false,
            token_count: Some(2),
        };
        assert!(matches!(
            validate_response(resp, "remote-test"),
            Err(BackendError::Protocol(_))
        ));
    }

    #[test]
    fn out_of_order_indices_rejected() {
        let resp = TokenStatsResponse {
            tokens: vec![token(0, -1.0, -2.0, 0.5), token(2, -1.0, -2.0, 0.5)],
            truncated: false,
            token_count: None,
        };
        assert!(matches!(
            validate_response(resp, "remote-test"),
            Err(BackendError::Protocol(_))
        ));
    }
}
