//! Classification metrics over (score, label) pairs. Machine is the positive
//! class; a score at or above the threshold predicts machine.

use serde::{Deserialize, Serialize};

use super::{EvalError, Label};

/// Area under the ROC curve by pair counting: a (machine, human) pair scores
/// 1 when the machine score is higher, 0.5 on a tie. Counts are integers, so
/// the result matches the brute-force double loop bit for bit.
pub fn auroc(scores: &[(f64, Label)]) -> Result<f64, EvalError> {
    let mut human: Vec<f64> = Vec::new();
    let mut machine: Vec<f64> = Vec::new();
    for &(s, label) in scores {
        assert!(s.is_finite(), "scores must be finite");
        match label {
            Label::Human => human.push(s),
            Label::Machine => machine.push(s),
        }
    }
    if human.is_empty() || machine.is_empty() {
        return Err(EvalError::DegenerateLabels);
    }
    human.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut wins: u64 = 0;
    let mut ties: u64 = 0;
    for &m in &machine {
        let below = human.partition_point(|&h| h < m) as u64;
        let at_or_below = human.partition_point(|&h| h <= m) as u64;
        wins += below;
        ties += at_or_below - below;
    }
    let pairs = (human.len() * machine.len()) as f64;
    Ok((wins as f64 + 0.5 * ties as f64) / pairs)
}

/// F1 of the machine class; 0 when there are no true positives and nothing
/// was predicted machine.
pub fn f1(predicted: &[Label], actual: &[Label]) -> f64 {
    assert_eq!(predicted.len(), actual.len());
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (Label::Machine, Label::Machine) => tp += 1,
            (Label::Machine, Label::Human) => fp += 1,
            (Label::Human, Label::Machine) => fn_ += 1,
            (Label::Human, Label::Human) => {}
        }
    }
    if 2 * tp + fp + fn_ == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdFit {
    pub threshold: f64,
    pub f1: f64,
    pub tpr: f64,
}

fn confusion_at(scores: &[(f64, Label)], threshold: f64) -> (f64, f64) {
    let (predicted, actual): (Vec<Label>, Vec<Label>) = scores
        .iter()
        .map(|&(s, label)| {
            let p = if s >= threshold {
                Label::Machine
            } else {
                Label::Human
            };
            (p, label)
        })
        .unzip();
    let n_machine = actual.iter().filter(|&&l| l == Label::Machine).count();
    let tp = predicted
        .iter()
        .zip(&actual)
        .filter(|&(&p, &a)| p == Label::Machine && a == Label::Machine)
        .count();
    let tpr = if n_machine == 0 {
        0.0
    } else {
        tp as f64 / n_machine as f64
    };
    (f1(&predicted, &actual), tpr)
}

/// Selects the threshold maximizing F1 over midpoints of adjacent distinct
/// scores plus the two infinite sentinels. Ties break toward higher recall,
/// then toward the lower threshold.
pub fn fit_threshold_f1(scores: &[(f64, Label)]) -> Result<ThresholdFit, EvalError> {
    let has_human = scores.iter().any(|&(_, l)| l == Label::Human);
    let has_machine = scores.iter().any(|&(_, l)| l == Label::Machine);
    if !has_human || !has_machine {
        return Err(EvalError::DegenerateLabels);
    }
    let mut distinct: Vec<f64> = scores.iter().map(|&(s, _)| s).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();

    let mut candidates = vec![f64::NEG_INFINITY];
    for pair in distinct.windows(2) {
        candidates.push(0.5 * (pair[0] + pair[1]));
    }
    candidates.push(f64::INFINITY);

    let mut best: Option<ThresholdFit> = None;
    for &t in &candidates {
        let (score_f1, tpr) = confusion_at(scores, t);
        let candidate = ThresholdFit {
            threshold: t,
            f1: score_f1,
            tpr,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                candidate.f1 > b.f1
                    || (candidate.f1 == b.f1 && candidate.tpr > b.tpr)
                    || (candidate.f1 == b.f1
                        && candidate.tpr == b.tpr
                        && candidate.threshold < b.threshold)
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.unwrap())
}

/// Highest TPR among operating points whose FPR does not exceed `fpr_cap`.
/// Only realized operating points count; nothing is interpolated.
pub fn tpr_at_fpr(scores: &[(f64, Label)], fpr_cap: f64) -> Result<f64, EvalError> {
    let n_human = scores.iter().filter(|&&(_, l)| l == Label::Human).count();
    let n_machine = scores.iter().filter(|&&(_, l)| l == Label::Machine).count();
    if n_human == 0 || n_machine == 0 {
        return Err(EvalError::DegenerateLabels);
    }
    let mut thresholds: Vec<f64> = scores.iter().map(|&(s, _)| s).collect();
    thresholds.push(f64::INFINITY);
    let mut best = 0.0f64;
    for &t in &thresholds {
        let fp = scores
            .iter()
            .filter(|&&(s, l)| l == Label::Human && s >= t)
            .count();
        if fp as f64 / n_human as f64 > fpr_cap {
            continue;
        }
        let tp = scores
            .iter()
            .filter(|&&(s, l)| l == Label::Machine && s >= t)
            .count();
        best = best.max(tp as f64 / n_machine as f64);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimingSummary {
    pub mean_seconds: f64,
    pub std_seconds: f64,
    /// Texts per second of total wall time.
    pub throughput: f64,
    pub n: usize,
}

/// Mean, population standard deviation, and throughput of per-text durations.
pub fn timing_stats(durations_seconds: &[f64]) -> Result<TimingSummary, EvalError> {
    let n = durations_seconds.len();
    if n < 2 {
        return Err(EvalError::InsufficientData { needed: 2, got: n });
    }
    let total: f64 = durations_seconds.iter().sum();
    let mean = total / n as f64;
    let var = durations_seconds
        .iter()
        .map(|d| (d - mean).powi(2))
        .sum::<f64>()
        / n as f64;
    Ok(TimingSummary {
        mean_seconds: mean,
        std_seconds: var.sqrt(),
        throughput: n as f64 / total,
        n,
    })
}
