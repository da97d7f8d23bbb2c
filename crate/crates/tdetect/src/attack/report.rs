//! Failure-rate measurement: the fraction of attacked machine texts that a
//! detector misclassifies as human at a threshold fitted on clean data.

use serde::{Deserialize, Serialize};

use super::{apply_attack, AttackError, AttackSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureRateRow {
    pub attack: String,
    pub failure_rate: f64,
    pub n_texts: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VulnerabilityReport {
    /// Per-attack rows, sorted by failure rate descending.
    pub rows: Vec<FailureRateRow>,
    /// Failure rate on unattacked machine text at the same threshold.
    pub baseline_failure_rate: f64,
}

impl VulnerabilityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("attack,failure_rate,n_texts,threshold\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.attack, row.failure_rate, row.n_texts, row.threshold
            ));
        }
        out.push_str(&format!("none,{},,\n", self.baseline_failure_rate));
        out
    }

    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            b.failure_rate
                .partial_cmp(&a.failure_rate)
                .unwrap()
                .then_with(|| a.attack.cmp(&b.attack))
        });
    }
}

/// Scores each machine text after attacking it with `spec`; a failure is a
/// score below `threshold` (classified human; machine is score-at-or-above).
pub fn failure_rate<F>(
    mut detector: F,
    machine_texts: &[String],
    spec: &AttackSpec,
    threshold: f64,
) -> Result<FailureRateRow, AttackError>
where
    F: FnMut(&str) -> f64,
{
    if machine_texts.is_empty() {
        return Err(AttackError::EmptyCorpus);
    }
    let mut failures = 0usize;
    for text in machine_texts {
        let attacked = apply_attack(text, spec)?;
        if detector(&attacked.text) < threshold {
            failures += 1;
        }
    }
    Ok(FailureRateRow {
        attack: spec.kind.as_str().to_string(),
        failure_rate: failures as f64 / machine_texts.len() as f64,
        n_texts: machine_texts.len(),
        threshold,
    })
}

/// Baseline failure rate on clean machine text.
pub fn baseline_failure_rate<F>(mut detector: F, machine_texts: &[String], threshold: f64) -> f64
where
    F: FnMut(&str) -> f64,
{
    let failures = machine_texts
        .iter()
        .filter(|t| detector(t) < threshold)
        .count();
    failures as f64 / machine_texts.len() as f64
}
