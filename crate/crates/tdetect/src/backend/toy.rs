//! Deterministic character n-gram backend.
//!
//! The tokenizer is a fixed map over the printable ASCII range plus a single
//! OOV bucket, so tokenization is reproducible everywhere. Probabilities are
//! Laplace-smoothed relative frequencies; per-position moments are computed
//! analytically over the full vocabulary, not sampled.

use std::collections::BTreeMap;

use rand::Rng;
use sha2::{Digest, Sha256};

use super::{
    BackendDescriptor, BackendError, BackendKind, PositionStats, ScoreBackend, TokenScoreSeries,
    MAX_TOKENS,
};

/// Printable ASCII 0x20..=0x7E plus one OOV bucket.
pub const VOCAB_SIZE: usize = 96;
/// Index of the OOV bucket.
pub const OOV_TOKEN: u8 = 95;
/// Identifier of the fixed character tokenizer.
pub const CHAR_TOKENIZER_ID: &str = "char-printable-v1";

const BOS: u8 = 255;

fn tokenize(text: &str) -> Vec<u8> {
    text.chars()
        .map(|c| {
            if (' '..='~').contains(&c) {
                (c as u8) - 0x20
            } else {
                OOV_TOKEN
            }
        })
        .collect()
}

fn token_to_char(tok: u8) -> char {
    debug_assert!(tok < OOV_TOKEN);
    (tok + 0x20) as char
}

/// Compensated (Kahan) summation in a fixed left-to-right order.
#[derive(Default)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

#[derive(Clone)]
struct ContextCounts {
    counts: [u64; VOCAB_SIZE],
    total: u64,
}

/// A Laplace-smoothed character n-gram model of order 1 to 4.
///
/// Two trained instances (different corpora or smoothing) serve as the
/// scoring/reference pair for the discrepancy detectors.
#[derive(Clone)]
pub struct ToyNgramModel {
    order: usize,
    smoothing: f64,
    counts: BTreeMap<Vec<u8>, ContextCounts>,
    digest: String,
}

impl ToyNgramModel {
    /// Trains the model on `corpus` with the given n-gram `order` and Laplace
    /// `smoothing` constant.
    pub fn train(corpus: &[String], order: usize, smoothing: f64) -> Result<Self, BackendError> {
        if !(1..=4).contains(&order) {
            return Err(BackendError::InvalidOrder(order));
        }
        if smoothing <= 0.0 || !smoothing.is_finite() {
            return Err(BackendError::InvalidSmoothing(smoothing));
        }
        if corpus.iter().all(|s| s.is_empty()) {
            return Err(BackendError::EmptyCorpus);
        }
        let mut counts: BTreeMap<Vec<u8>, ContextCounts> = BTreeMap::new();
        for line in corpus {
            let tokens = tokenize(line);
            let mut padded = vec![BOS; order - 1];
            padded.extend_from_slice(&tokens);
            for window in padded.windows(order) {
                let (ctx, next) = window.split_at(order - 1);
                let entry = counts.entry(ctx.to_vec()).or_insert(ContextCounts {
                    counts: [0; VOCAB_SIZE],
                    total: 0,
                });
                entry.counts[next[0] as usize] += 1;
                entry.total += 1;
            }
        }
        let digest = Self::compute_digest(order, smoothing, &counts);
        Ok(Self {
            order,
            smoothing,
            counts,
            digest,
        })
    }

    fn compute_digest(order: usize, smoothing: f64, counts: &BTreeMap<Vec<u8>, ContextCounts>) -> String {
        let mut hasher = Sha256::new();
        hasher.update([order as u8]);
        hasher.update(smoothing.to_le_bytes());
        for (ctx, cc) in counts {
            hasher.update(ctx);
            for c in cc.counts {
                hasher.update(c.to_le_bytes());
            }
        }
        let out = hasher.finalize();
        hex_prefix(&out, 12)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn tokenizer_id(&self) -> &'static str {
        CHAR_TOKENIZER_ID
    }

    /// Short content digest of the trained tables; part of the backend id.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    fn context_for(&self, prefix: &[u8]) -> Vec<u8> {
        let need = self.order - 1;
        let mut ctx = Vec::with_capacity(need);
        if prefix.len() < need {
            ctx.extend(std::iter::repeat_n(BOS, need - prefix.len()));
            ctx.extend_from_slice(prefix);
        } else {
            ctx.extend_from_slice(&prefix[prefix.len() - need..]);
        }
        ctx
    }

    /// Smoothed conditional probability of every token given the prefix.
    pub fn prob_row(&self, prefix: &[u8]) -> [f64; VOCAB_SIZE] {
        let ctx = self.context_for(prefix);
        let (counts, total) = match self.counts.get(&ctx) {
            Some(cc) => (cc.counts, cc.total),
            None => ([0u64; VOCAB_SIZE], 0u64),
        };
        let denom = total as f64 + self.smoothing * VOCAB_SIZE as f64;
        let mut row = [0.0; VOCAB_SIZE];
        for (i, c) in counts.iter().enumerate() {
            row[i] = (*c as f64 + self.smoothing) / denom;
        }
        row
    }

    /// Natural-log conditional probability of every token given the prefix.
    pub fn log_prob_row(&self, prefix: &[u8]) -> [f64; VOCAB_SIZE] {
        let mut row = self.prob_row(prefix);
        for p in row.iter_mut() {
            *p = p.ln();
        }
        row
    }

    /// Samples a text of `len` characters. OOV is excluded by renormalizing
    /// over the printable range, so output is always printable ASCII.
    pub fn sample<R: Rng>(&self, rng: &mut R, len: usize) -> String {
        let mut tokens: Vec<u8> = Vec::with_capacity(len);
        let mut out = String::with_capacity(len);
        for _ in 0..len {
            let row = self.prob_row(&tokens);
            let printable_mass: f64 = row[..OOV_TOKEN as usize].iter().sum();
            let mut u = rng.gen::<f64>() * printable_mass;
            let mut chosen = OOV_TOKEN - 1;
            for (i, p) in row[..OOV_TOKEN as usize].iter().enumerate() {
                u -= p;
                if u <= 0.0 {
                    chosen = i as u8;
                    break;
                }
            }
            tokens.push(chosen);
            out.push(token_to_char(chosen));
        }
        out
    }
}

fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes.iter().take(n).map(|b| format!("{b:02x}")).collect()
}

/// Scoring/reference model pair over the shared character tokenizer.
pub struct ToyBackendPair {
    scoring: ToyNgramModel,
    reference: ToyNgramModel,
    descriptor: BackendDescriptor,
}

impl ToyBackendPair {
    pub fn new(scoring: ToyNgramModel, reference: ToyNgramModel) -> Result<Self, BackendError> {
        // The analytic moments formula presumes a shared token space.
        if scoring.tokenizer_id() != reference.tokenizer_id() {
            return Err(BackendError::TokenizerMismatch(
                scoring.tokenizer_id().to_string(),
                reference.tokenizer_id().to_string(),
            ));
        }
        let model_name = format!(
            "toy-ngram-s{}o{}-r{}o{}",
            scoring.digest(),
            scoring.order(),
            reference.digest(),
            reference.order()
        );
        let descriptor = BackendDescriptor {
            kind: BackendKind::ToyNgram,
            model_name,
            vocabulary_size: VOCAB_SIZE,
            deterministic: true,
        };
        Ok(Self {
            scoring,
            reference,
            descriptor,
        })
    }

    pub fn scoring_model(&self) -> &ToyNgramModel {
        &self.scoring
    }

    pub fn reference_model(&self) -> &ToyNgramModel {
        &self.reference
    }
}

impl ScoreBackend for ToyBackendPair {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn score_text(&self, text: &str) -> Result<TokenScoreSeries, BackendError> {
        if text.trim().is_empty() {
            return Err(BackendError::EmptyInput);
        }
        let tokens = tokenize(text);
        let truncated = tokens.len() > MAX_TOKENS;
        let tokens = &tokens[..tokens.len().min(MAX_TOKENS)];

        let mut positions = Vec::with_capacity(tokens.len());
        for (i, &tok) in tokens.iter().enumerate() {
            let prefix = &tokens[..i];
            let log_score = self.scoring.log_prob_row(prefix);
            let prob_ref = self.reference.prob_row(prefix);

            let mut mean = KahanSum::default();
            let mut second = KahanSum::default();
            for t in 0..VOCAB_SIZE {
                mean.add(prob_ref[t] * log_score[t]);
                second.add(prob_ref[t] * log_score[t] * log_score[t]);
            }
            let mu_ref = mean.value();
            let var_ref = (second.value() - mu_ref * mu_ref).max(0.0);

            positions.push(PositionStats {
                token_index: i,
                logp_observed: log_score[tok as usize],
                mu_ref,
                var_ref,
            });
        }

        Ok(TokenScoreSeries {
            token_count: positions.len(),
            positions,
            backend_id: self.descriptor.model_name.clone(),
            truncated,
        })
    }
}
