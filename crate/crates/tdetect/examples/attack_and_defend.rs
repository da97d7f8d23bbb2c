//! Sweep every text perturbation attack against the detector, measure the
//! failure rate at a threshold fitted on clean data, then show how Unicode
//! normalization undoes the invisible-character attacks.
//!
//! ```sh
//! cargo run --example attack_and_defend
//! ```

use tdetect::attack::{self, AttackKind, AttackSpec, VulnerabilityReport};
use tdetect::eval::{fit_threshold_f1, Label};
use tdetect::fixture;
use tdetect::scoring::{self, Method};

fn main() {
    let corpus = fixture::synthetic_corpus(15, 3).expect("fixture corpus builds");
    let backend = fixture::fixture_backend();
    let score = |text: &str| -> f64 {
        scoring::score_with_backend(&backend, text, Method::TDetect, 5.0)
            .map(|s| s.value)
            .unwrap_or(f64::NEG_INFINITY)
    };

    let clean: Vec<(f64, Label)> = corpus
        .records
        .iter()
        .map(|r| (score(&r.text), r.label))
        .collect();
    let fit = fit_threshold_f1(&clean).expect("both classes present");
    println!("clean threshold {:.4} (dev F1 {:.3})", fit.threshold, fit.f1);

    let machine_texts: Vec<String> = corpus
        .records
        .iter()
        .filter(|r| r.label == Label::Machine)
        .map(|r| r.text.clone())
        .collect();

    let baseline = attack::baseline_failure_rate(score, &machine_texts, fit.threshold);
    let mut report = VulnerabilityReport {
        rows: AttackKind::ALL
            .iter()
            .map(|&kind| {
                let spec = AttackSpec::new(kind, 1.0, 42).unwrap();
                attack::failure_rate(score, &machine_texts, &spec, fit.threshold).unwrap()
            })
            .collect(),
        baseline_failure_rate: baseline,
    };
    report.sort_rows();
    print!("{}", report.to_csv());

    // Defense: the invisible and lookalike attacks are exactly invertible.
    let sample = &machine_texts[0];
    let spec = AttackSpec::new(AttackKind::ZeroWidthSpace, 1.0, 42).unwrap();
    let attacked = attack::apply_attack(sample, &spec).unwrap();
    let restored = attack::normalize_defense(&attacked.text);
    println!(
        "\nzero-width attack grew {} -> {} chars; defense restores the original: {}",
        sample.chars().count(),
        attacked.text.chars().count(),
        restored == *sample
    );
    println!(
        "score clean {:+.3}, attacked {:+.3}, defended {:+.3}",
        score(sample),
        score(&attacked.text),
        score(&restored)
    );
}
