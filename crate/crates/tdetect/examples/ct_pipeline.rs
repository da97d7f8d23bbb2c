//! Two-dimensional detection: score the original text and a content-only
//! version (function words and punctuation stripped), fit the linear
//! combiner on a development split, and score new text with the pair.
//!
//! ```sh
//! cargo run --example ct_pipeline
//! ```

use tdetect::backend::ScoreBackend;
use tdetect::ct::{self, ContentExtractionConfig, ScorePair, SvrHyper};
use tdetect::eval::{self, Label};
use tdetect::fixture;
use tdetect::scoring::{self, Method};

fn main() {
    let config = ContentExtractionConfig::default_list();
    let sample = "The cat sat on the mat and the dog slept by the door.";
    println!("original: {sample}");
    println!("content:  {}\n", ct::extract_content(sample, &config).unwrap());

    let corpus = fixture::synthetic_corpus(20, 5).expect("fixture corpus builds");
    let backend = fixture::fixture_backend();
    let pair_for = |text: &str| -> ScorePair {
        let s_t = scoring::score_with_backend(&backend, text, Method::TDetect, 5.0).unwrap();
        let content = ct::extract_content(text, &config).unwrap_or_else(|_| text.to_string());
        let s_c = scoring::score_with_backend(&backend, &content, Method::TDetect, 5.0).unwrap();
        ScorePair { s_t, s_c }
    };

    let (dev_idx, eval_idx) = eval::split_corpus(&corpus, &eval::SplitSpec::default()).unwrap();
    let dev: Vec<(ScorePair, Label)> = dev_idx
        .iter()
        .map(|&i| (pair_for(&corpus.records[i].text), corpus.records[i].label))
        .collect();

    let model = ct::fit_combiner(&dev, &SvrHyper::default()).expect("combiner fits");
    println!(
        "combiner: {:.4}*s_t + {:.4}*s_c + {:.4} ({} iterations)",
        model.weights[0], model.weights[1], model.bias, model.training_meta.iteration_count
    );

    let eval_scores: Vec<(f64, Label)> = eval_idx
        .iter()
        .map(|&i| {
            let p = pair_for(&corpus.records[i].text);
            (
                model.predict(p.s_t.value, p.s_c.value),
                corpus.records[i].label,
            )
        })
        .collect();
    let single: Vec<(f64, Label)> = eval_idx
        .iter()
        .map(|&i| {
            (
                pair_for(&corpus.records[i].text).s_t.value,
                corpus.records[i].label,
            )
        })
        .collect();
    println!(
        "eval AUROC: combined {:.4} vs text-only {:.4}",
        eval::auroc(&eval_scores).unwrap(),
        eval::auroc(&single).unwrap()
    );

    // Per-text scoring through the high-level entry point, including the
    // fallback when the content representation is empty.
    let outcome = ct::ct_score(
        &corpus.records[0].text,
        &backend,
        Method::TDetect,
        5.0,
        &model,
        &config,
    )
    .unwrap();
    println!(
        "first record: combined {:+.4} (s_t {:+.4}, s_c {:?}, fallback {})",
        outcome.score.value, outcome.s_t, outcome.s_c, outcome.fallback
    );
    let _ = backend.descriptor();
}
