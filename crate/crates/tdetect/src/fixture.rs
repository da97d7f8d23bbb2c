//! Self-contained fixtures: a small embedded sentence corpus, a ready-made
//! toy backend pair trained on it, and a synthetic labeled corpus generator.
//! These exist so examples and tests run with no external data or network.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::backend::{BackendError, ToyBackendPair, ToyNgramModel};
use crate::eval::{CorpusRecord, Label, LabeledCorpus};

const FIXTURE_CORPUS: &str = include_str!("../data/fixture_corpus.txt");

/// The embedded sentences, one per line.
pub fn fixture_sentences() -> Vec<String> {
    FIXTURE_CORPUS
        .lines()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect()
}

/// Even-indexed sentences train the models; odd-indexed ones are held out as
/// "human" texts, so natural text is genuinely out-of-sample for the models.
fn training_split() -> (Vec<String>, Vec<String>) {
    let mut train = Vec::new();
    let mut held_out = Vec::new();
    for (i, s) in fixture_sentences().into_iter().enumerate() {
        if i % 2 == 0 {
            train.push(s);
        } else {
            held_out.push(s);
        }
    }
    (train, held_out)
}

/// The held-out sentences the models never saw.
pub fn held_out_sentences() -> Vec<String> {
    training_split().1
}

/// A deterministic scoring/reference pair trained on the embedded corpus.
/// The two models share training data but differ in smoothing, so their
/// expectations disagree enough for the discrepancy to carry signal.
pub fn fixture_backend() -> ToyBackendPair {
    let (train, _) = training_split();
    let scoring = ToyNgramModel::train(&train, 3, 0.1).expect("embedded corpus trains");
    let reference = ToyNgramModel::train(&train, 3, 1.0).expect("embedded corpus trains");
    ToyBackendPair::new(scoring, reference).expect("same tokenizer")
}

/// Near-greedy decoding from `model`: mostly the modal next character with
/// occasional second choices. The output is high-likelihood under the model,
/// the way generator output is, which is what separates it from natural text.
fn decode_greedy(model: &ToyNgramModel, rng: &mut ChaCha8Rng, len: usize) -> String {
    use rand::Rng;
    let mut tokens: Vec<u8> = Vec::with_capacity(len);
    let mut out = String::with_capacity(len);
    for _ in 0..len {
        let row = model.prob_row(&tokens);
        let mut best = (0usize, f64::NEG_INFINITY);
        let mut second = (0usize, f64::NEG_INFINITY);
        for (i, &p) in row.iter().enumerate().take(95) {
            if p > best.1 {
                second = best;
                best = (i, p);
            } else if p > second.1 {
                second = (i, p);
            }
        }
        let tok = if rng.gen_bool(0.95) { best.0 } else { second.0 } as u8;
        tokens.push(tok);
        out.push((tok + 0x20) as char);
    }
    out
}

/// Builds a labeled corpus: humans are embedded sentences, machines are
/// near-greedy decodes from the scoring model (so the performer assigns them
/// high likelihood, mimicking the real separation). `n_per_class` per domain.
pub fn synthetic_corpus(n_per_class: usize, seed: u64) -> Result<LabeledCorpus, BackendError> {
    let (train, held_out) = training_split();
    let scoring = ToyNgramModel::train(&train, 3, 0.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domains = ["news", "essays"];
    let mut records = Vec::with_capacity(2 * domains.len() * n_per_class);
    for (d, domain) in domains.iter().enumerate() {
        for i in 0..n_per_class {
            let human = &held_out[(d * n_per_class + i) % held_out.len()];
            records.push(CorpusRecord {
                id: format!("human-{domain}-{i}"),
                text: human.clone(),
                label: Label::Human,
                domain: domain.to_string(),
                attack: "none".into(),
                generator: "unknown".into(),
            });
            let machine = decode_greedy(&scoring, &mut rng, 80 + (i % 5) * 20);
            records.push(CorpusRecord {
                id: format!("machine-{domain}-{i}"),
                text: machine,
                label: Label::Machine,
                domain: domain.to_string(),
                attack: "none".into(),
                generator: "toy-sampler".into(),
            });
        }
    }
    Ok(LabeledCorpus { records })
}
