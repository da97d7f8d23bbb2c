//! Two-dimensional detection: score the original text (T) and a content-only
//! representation (C), then combine the two scores with a trained regressor.

mod combiner;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use combiner::{fit_combiner, CombinerKind, CombinerModel, SvrHyper, TrainingMeta};

use crate::backend::ScoreBackend;
use crate::scoring::{self, DetectError, DetectionScore, Method};

const DEFAULT_FUNCTION_WORDS: &str = include_str!("../../data/function_words.txt");

#[derive(Debug, Error)]
pub enum CtError {
    #[error("content representation is empty (all tokens were function words)")]
    EmptyContent,
    #[error("input text is empty")]
    EmptyInput,
    #[error("function word list must be non-empty and duplicate-free")]
    InvalidFunctionWordList,
    #[error("development set contains a single class")]
    DegenerateTraining,
    #[error("development set too small: {0} examples (need at least 10)")]
    TooFewExamples(usize),
    #[error(transparent)]
    Detect(#[from] DetectError),
}

/// Configuration for deriving the content-only representation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContentExtractionConfig {
    /// Lowercase word forms to strip; ordered and duplicate-free.
    pub function_word_list: Vec<String>,
    pub strip_punctuation: bool,
    pub collapse_whitespace: bool,
}

impl ContentExtractionConfig {
    /// Validates the invariants on the word list.
    pub fn new(
        function_word_list: Vec<String>,
        strip_punctuation: bool,
        collapse_whitespace: bool,
    ) -> Result<Self, CtError> {
        if function_word_list.is_empty() {
            return Err(CtError::InvalidFunctionWordList);
        }
        let mut seen = std::collections::HashSet::new();
        for w in &function_word_list {
            if !seen.insert(w.as_str()) {
                return Err(CtError::InvalidFunctionWordList);
            }
        }
        Ok(Self {
            function_word_list,
            strip_punctuation,
            collapse_whitespace,
        })
    }

    /// The shipped, versioned default list of English function words.
    pub fn default_list() -> Self {
        let words: Vec<String> = DEFAULT_FUNCTION_WORDS
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        Self::new(words, true, true).expect("embedded function word list is valid")
    }

    fn is_function_word(&self, token: &str) -> bool {
        let lower = token.to_lowercase();
        self.function_word_list.contains(&lower)
    }
}

/// Scores for the original text and its content representation; both produced
/// by the same method and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub s_t: DetectionScore,
    pub s_c: DetectionScore,
}

/// Removes function words (and optionally punctuation) from `text`, keeping
/// the case of retained words.
pub fn extract_content(text: &str, config: &ContentExtractionConfig) -> Result<String, CtError> {
    if text.is_empty() {
        return Err(CtError::EmptyInput);
    }
    #[derive(PartialEq)]
    enum Kind {
        Word,
        Punct,
        Space,
    }
    let mut segments: Vec<(Kind, String)> = Vec::new();
    for c in text.chars() {
        let kind = if c.is_alphanumeric() || c == '\'' {
            Kind::Word
        } else if c.is_whitespace() {
            Kind::Space
        } else {
            Kind::Punct
        };
        match segments.last_mut() {
            Some((k, s)) if *k == kind => s.push(c),
            _ => segments.push((kind, c.to_string())),
        }
    }

    let mut kept = String::with_capacity(text.len());
    for (kind, seg) in &segments {
        match kind {
            Kind::Word => {
                if !config.is_function_word(seg) {
                    kept.push_str(seg);
                } else {
                    kept.push(' ');
                }
            }
            Kind::Punct => {
                if config.strip_punctuation {
                    kept.push(' ');
                } else {
                    kept.push_str(seg);
                }
            }
            Kind::Space => kept.push_str(seg),
        }
    }

    let result = if config.collapse_whitespace {
        let mut out = String::with_capacity(kept.len());
        for token in kept.split_whitespace() {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(token);
        }
        out
    } else {
        kept.trim().to_string()
    };

    if result.is_empty() {
        return Err(CtError::EmptyContent);
    }
    Ok(result)
}

/// Combined score plus the intermediate features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CtOutcome {
    pub score: DetectionScore,
    pub s_t: f64,
    /// None when the content representation was empty and the text-only
    /// fallback fired.
    pub s_c: Option<f64>,
    pub fallback: bool,
}

/// Scores `text` and its content representation, then applies the fitted
/// linear combiner. An empty content representation falls back to the
/// text-only term rather than failing the text.
pub fn ct_score(
    text: &str,
    backend: &dyn ScoreBackend,
    method: Method,
    nu: f64,
    combiner: &CombinerModel,
    config: &ContentExtractionConfig,
) -> Result<CtOutcome, CtError> {
    let s_t = scoring::score_with_backend(backend, text, method, nu)?.value;
    let (s_c, fallback) = match extract_content(text, config) {
        Ok(content) => {
            let score = scoring::score_with_backend(backend, &content, method, nu)?;
            (Some(score.value), false)
        }
        Err(CtError::EmptyContent) => (None, true),
        Err(e) => return Err(e),
    };
    let value = match s_c {
        Some(c) => combiner.weights[0] * s_t + combiner.weights[1] * c + combiner.bias,
        None => combiner.weights[0] * s_t + combiner.bias,
    };
    Ok(CtOutcome {
        score: DetectionScore {
            value,
            method: Method::Ct,
            nu: if method == Method::TDetect {
                Some(nu)
            } else {
                None
            },
            elapsed_seconds: 0.0,
        },
        s_t,
        s_c,
        fallback,
    })
}
