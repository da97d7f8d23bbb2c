//! Zero-shot detection of machine-generated text via heavy-tailed discrepancy
//! scoring.
//!
//! The engine computes a per-token sampling discrepancy between a scoring
//! language model and a reference language model, then normalizes it either
//! with the usual Gaussian z-score or with a Student-t variance factor that is
//! robust to the leptokurtic score distributions produced by adversarial text.
//! Around that core sit a two-dimensional text/content framework, an
//! adversarial attack and Unicode-defense suite, distribution diagnostics, and
//! an evaluation harness.
//!
//! See the `examples/` directory for one runnable example per capability; the
//! `tdetect` binary exposes the same operations as subcommands.

pub mod attack;
pub mod backend;
pub mod cli;
pub mod ct;
pub mod eval;
pub mod fixture;
pub mod scoring;
pub mod stats;

pub use backend::{BackendDescriptor, PositionStats, TokenScoreSeries, MAX_TOKENS};
pub use scoring::{DetectionScore, Discrepancy, Method, DEFAULT_NU};
