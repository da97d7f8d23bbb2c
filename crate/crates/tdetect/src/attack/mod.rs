//! Adversarial text perturbations, the Unicode normalization defense, and
//! per-attack failure-rate measurement.

mod defense;
mod perturb;
mod report;
mod tables;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use defense::normalize_defense;
pub use perturb::{apply_attack, Attacked};
pub use report::{baseline_failure_rate, failure_rate, FailureRateRow, VulnerabilityReport};
pub use tables::{confusables, fold_table, thesaurus, us_uk_spelling};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("input text is empty")]
    EmptyInput,
    #[error("no machine texts supplied")]
    EmptyCorpus,
    #[error("intensity {0} outside [0, 1]")]
    InvalidIntensity(f64),
    #[error("unknown attack kind '{0}'")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    ZeroWidthSpace,
    Homoglyph,
    Whitespace,
    InsertParagraphs,
    Number,
    AlternativeSpelling,
    Synonym,
    Misspelling,
    ArticleDeletion,
    CaseFlip,
}

impl AttackKind {
    pub const ALL: [AttackKind; 10] = [
        AttackKind::ZeroWidthSpace,
        AttackKind::Homoglyph,
        AttackKind::Whitespace,
        AttackKind::InsertParagraphs,
        AttackKind::Number,
        AttackKind::AlternativeSpelling,
        AttackKind::Synonym,
        AttackKind::Misspelling,
        AttackKind::ArticleDeletion,
        AttackKind::CaseFlip,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AttackKind::ZeroWidthSpace => "zero_width_space",
            AttackKind::Homoglyph => "homoglyph",
            AttackKind::Whitespace => "whitespace",
            AttackKind::InsertParagraphs => "insert_paragraphs",
            AttackKind::Number => "number",
            AttackKind::AlternativeSpelling => "alternative_spelling",
            AttackKind::Synonym => "synonym",
            AttackKind::Misspelling => "misspelling",
            AttackKind::ArticleDeletion => "article_deletion",
            AttackKind::CaseFlip => "case_flip",
        }
    }
}

impl std::str::FromStr for AttackKind {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttackKind::ALL
            .iter()
            .find(|k| k.as_str() == s)
            .copied()
            .ok_or_else(|| AttackError::UnknownKind(s.to_string()))
    }
}

/// A deterministic perturbation recipe: which attack, how many eligible sites
/// to hit, and the seed that pins site selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Fraction of eligible sites perturbed, in [0, 1].
    pub intensity: f64,
    pub seed: u64,
}

impl AttackSpec {
    pub fn new(kind: AttackKind, intensity: f64, seed: u64) -> Result<Self, AttackError> {
        if !(0.0..=1.0).contains(&intensity) {
            return Err(AttackError::InvalidIntensity(intensity));
        }
        Ok(Self {
            kind,
            intensity,
            seed,
        })
    }
}
