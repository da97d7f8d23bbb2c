//! Two-feature linear combiner for the text/content score pair.
//!
//! The default is a linear SVR trained by deterministic full-batch
//! subgradient descent on the mean epsilon-insensitive loss with L2
//! regularization `(1/(2C)) * ||w||^2`; using the sample mean makes the loss
//! invariant under duplicating the development set. A closed-form ridge
//! regression is available as a fallback kind.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CtError, ScorePair};
use crate::eval::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinerKind {
    LinearSvr,
    Ridge,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SvrHyper {
    pub epsilon: f64,
    pub c: f64,
    pub kind: CombinerKind,
}

impl Default for SvrHyper {
    fn default() -> Self {
        // Convention, not a published value.
        Self {
            epsilon: 0.1,
            c: 1.0,
            kind: CombinerKind::LinearSvr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epsilon: f64,
    pub regularization_c: f64,
    pub iteration_count: usize,
    pub dev_set_hash: String,
}

/// Fitted decision function `w_t * s_t + w_c * s_c + bias` over targets
/// {human -> 0, machine -> 1}. The regressor output is used directly as a
/// score; rank-based metrics need no squashing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinerModel {
    pub kind: CombinerKind,
    /// `[w_t, w_c]`.
    pub weights: [f64; 2],
    pub bias: f64,
    pub training_meta: TrainingMeta,
}

impl CombinerModel {
    pub fn predict(&self, s_t: f64, s_c: f64) -> f64 {
        self.weights[0] * s_t + self.weights[1] * s_c + self.bias
    }
}

fn dev_hash(rows: &[([f64; 2], f64)]) -> String {
    let mut hasher = Sha256::new();
    for (x, y) in rows {
        hasher.update(x[0].to_le_bytes());
        hasher.update(x[1].to_le_bytes());
        hasher.update(y.to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Groups bit-identical rows into (x, y, multiplicity). Duplicating the dev
/// set doubles every multiplicity; doubling is exact in floating point, so
/// every weighted mean below is bit-identical under duplication.
fn weighted_rows(rows: &[([f64; 2], f64)]) -> Vec<([f64; 2], f64, f64)> {
    let mut index: std::collections::HashMap<[u8; 24], usize> = std::collections::HashMap::new();
    let mut out: Vec<([f64; 2], f64, f64)> = Vec::new();
    for (x, y) in rows {
        let mut key = [0u8; 24];
        key[..8].copy_from_slice(&x[0].to_le_bytes());
        key[8..16].copy_from_slice(&x[1].to_le_bytes());
        key[16..].copy_from_slice(&y.to_le_bytes());
        match index.get(&key) {
            Some(&i) => out[i].2 += 1.0,
            None => {
                index.insert(key, out.len());
                out.push((*x, *y, 1.0));
            }
        }
    }
    out
}

/// Closed-form ridge solution on centered features; regularization strength
/// is `1/c`.
fn ridge_fit(rows: &[([f64; 2], f64, f64)], lambda: f64) -> ([f64; 2], f64) {
    let n: f64 = rows.iter().map(|(_, _, w)| w).sum();
    let mean_x = [
        rows.iter().map(|(x, _, w)| w * x[0]).sum::<f64>() / n,
        rows.iter().map(|(x, _, w)| w * x[1]).sum::<f64>() / n,
    ];
    let mean_y = rows.iter().map(|(_, y, w)| w * y).sum::<f64>() / n;

    let mut s00 = 0.0;
    let mut s01 = 0.0;
    let mut s11 = 0.0;
    let mut sy0 = 0.0;
    let mut sy1 = 0.0;
    for (x, y, w) in rows {
        let d0 = x[0] - mean_x[0];
        let d1 = x[1] - mean_x[1];
        let dy = y - mean_y;
        s00 += w * d0 * d0;
        s01 += w * d0 * d1;
        s11 += w * d1 * d1;
        sy0 += w * d0 * dy;
        sy1 += w * d1 * dy;
    }
    let a00 = s00 / n + lambda;
    let a01 = s01 / n;
    let a11 = s11 / n + lambda;
    let b0 = sy0 / n;
    let b1 = sy1 / n;
    let det = a00 * a11 - a01 * a01;
    let weights = if det.abs() < 1e-300 {
        [0.0, 0.0]
    } else {
        [(b0 * a11 - b1 * a01) / det, (b1 * a00 - b0 * a01) / det]
    };
    let bias = mean_y - weights[0] * mean_x[0] - weights[1] * mean_x[1];
    (weights, bias)
}

fn svr_objective(
    rows: &[([f64; 2], f64, f64)],
    w: &[f64; 2],
    b: f64,
    eps: f64,
    lambda: f64,
) -> f64 {
    let n: f64 = rows.iter().map(|(_, _, wt)| wt).sum();
    let mut loss = 0.0;
    for (x, y, wt) in rows {
        let r = y - (w[0] * x[0] + w[1] * x[1] + b);
        loss += wt * (r.abs() - eps).max(0.0);
    }
    0.5 * lambda * (w[0] * w[0] + w[1] * w[1]) + loss / n
}

const SVR_ITERATIONS: usize = 4000;

fn svr_fit(rows: &[([f64; 2], f64, f64)], eps: f64, lambda: f64) -> ([f64; 2], f64, usize) {
    // Warm start from ridge, then full-batch subgradient descent with a
    // fixed, deterministic schedule.
    let (mut w, mut b) = ridge_fit(rows, lambda);
    let n: f64 = rows.iter().map(|(_, _, wt)| wt).sum();
    let mut best = (w, b, svr_objective(rows, &w, b, eps, lambda));
    for t in 0..SVR_ITERATIONS {
        let mut g0 = lambda * w[0];
        let mut g1 = lambda * w[1];
        let mut gb = 0.0;
        for (x, y, wt) in rows {
            let r = y - (w[0] * x[0] + w[1] * x[1] + b);
            if r.abs() > eps {
                let s = r.signum() * wt;
                g0 -= s * x[0] / n;
                g1 -= s * x[1] / n;
                gb -= s / n;
            }
        }
        let eta = 0.5 / (1.0 + t as f64 / 200.0);
        w[0] -= eta * g0;
        w[1] -= eta * g1;
        b -= eta * gb;
        let obj = svr_objective(rows, &w, b, eps, lambda);
        if obj < best.2 {
            best = (w, b, obj);
        }
    }
    (best.0, best.1, SVR_ITERATIONS)
}

/// Fits the combiner on a labeled development set of score pairs.
pub fn fit_combiner(
    dev: &[(ScorePair, Label)],
    hyper: &SvrHyper,
) -> Result<CombinerModel, CtError> {
    if dev.len() < 10 {
        return Err(CtError::TooFewExamples(dev.len()));
    }
    let has_human = dev.iter().any(|(_, l)| *l == Label::Human);
    let has_machine = dev.iter().any(|(_, l)| *l == Label::Machine);
    if !has_human || !has_machine {
        return Err(CtError::DegenerateTraining);
    }
    let rows: Vec<([f64; 2], f64)> = dev
        .iter()
        .map(|(pair, label)| {
            (
                [pair.s_t.value, pair.s_c.value],
                match label {
                    Label::Human => 0.0,
                    Label::Machine => 1.0,
                },
            )
        })
        .collect();
    let lambda = 1.0 / hyper.c;
    let weighted = weighted_rows(&rows);
    let (weights, bias, iterations) = match hyper.kind {
        CombinerKind::Ridge => {
            let (w, b) = ridge_fit(&weighted, lambda);
            (w, b, 1)
        }
        CombinerKind::LinearSvr => svr_fit(&weighted, hyper.epsilon, lambda),
    };
    Ok(CombinerModel {
        kind: hyper.kind,
        weights,
        bias,
        training_meta: TrainingMeta {
            epsilon: hyper.epsilon,
            regularization_c: hyper.c,
            iteration_count: iterations,
            dev_set_hash: dev_hash(&rows),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{DetectionScore, Method};

    fn pair(s_t: f64, s_c: f64) -> ScorePair {
        let mk = |v| DetectionScore {
            value: v,
            method: Method::Gaussian,
            nu: None,
            elapsed_seconds: 0.0,
        };
        ScorePair {
            s_t: mk(s_t),
            s_c: mk(s_c),
        }
    }

    fn separable_dev() -> Vec<(ScorePair, Label)> {
        let mut dev = Vec::new();
        for i in 0..10 {
            let x = i as f64 * 0.1;
            dev.push((pair(-2.0 - x, -1.5 - x), Label::Human));
            dev.push((pair(2.0 + x, 1.5 + x), Label::Machine));
        }
        dev
    }

    #[test]
    fn separable_dev_set_is_separated() {
        let model = fit_combiner(&separable_dev(), &SvrHyper::default()).unwrap();
        let max_human: f64 = separable_dev()
            .iter()
            .filter(|(_, l)| *l == Label::Human)
            .map(|(p, _)| model.predict(p.s_t.value, p.s_c.value))
            .fold(f64::NEG_INFINITY, f64::max);
        let min_machine: f64 = separable_dev()
            .iter()
            .filter(|(_, l)| *l == Label::Machine)
            .map(|(p, _)| model.predict(p.s_t.value, p.s_c.value))
            .fold(f64::INFINITY, f64::min);
        assert!(min_machine > max_human);
    }

    #[test]
    fn noise_feature_gets_smaller_weight() {
        // s_t separates the classes; s_c is fixed noise uncorrelated with the
        // label.
        let noise = [0.3, -0.7, 0.1, -0.2, 0.5, -0.4, 0.6, -0.1, 0.2, -0.5];
        let mut dev = Vec::new();
        for (i, &z) in noise.iter().enumerate() {
            dev.push((pair(-1.0 - 0.05 * i as f64, z), Label::Human));
            dev.push((pair(1.0 + 0.05 * i as f64, -z), Label::Machine));
        }
        for kind in [CombinerKind::Ridge, CombinerKind::LinearSvr] {
            let hyper = SvrHyper {
                kind,
                ..SvrHyper::default()
            };
            let model = fit_combiner(&dev, &hyper).unwrap();
            assert!(
                model.weights[1].abs() < model.weights[0].abs(),
                "{kind:?}: {:?}",
                model.weights
            );
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn ridge_matches_least_squares_oracle() {
        // Independent normal-equations solve with explicit matrix inversion.
        let dev = separable_dev();
        let hyper = SvrHyper {
            kind: CombinerKind::Ridge,
            c: 1.0,
            epsilon: 0.1,
        };
        let model = fit_combiner(&dev, &hyper).unwrap();

        let rows: Vec<([f64; 2], f64)> = dev
            .iter()
            .map(|(p, l)| {
                (
                    [p.s_t.value, p.s_c.value],
                    if *l == Label::Machine { 1.0 } else { 0.0 },
                )
            })
            .collect();
        // 3x3 system over [w0, w1, b] for mean squared loss + lambda on w.
        let n = rows.len() as f64;
        let lambda = 1.0;
        let mut a = [[0.0f64; 3]; 3];
        let mut rhs = [0.0f64; 3];
        for (x, y) in &rows {
            let xe = [x[0], x[1], 1.0];
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] += xe[i] * xe[j] / n;
                }
                rhs[i] += xe[i] * y / n;
            }
        }
        a[0][0] += lambda;
        a[1][1] += lambda;
        // Gaussian elimination.
        let mut m = [[0.0f64; 4]; 3];
        for i in 0..3 {
            m[i][..3].copy_from_slice(&a[i]);
            m[i][3] = rhs[i];
        }
        for col in 0..3 {
            let pivot = (col..3)
                .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
                .unwrap();
            m.swap(col, pivot);
            let p = m[col][col];
            for j in col..4 {
                m[col][j] /= p;
            }
            for i in 0..3 {
                if i != col {
                    let f = m[i][col];
                    for j in col..4 {
                        m[i][j] -= f * m[col][j];
                    }
                }
            }
        }
        assert!((model.weights[0] - m[0][3]).abs() < 1e-9);
        assert!((model.weights[1] - m[1][3]).abs() < 1e-9);
        assert!((model.bias - m[2][3]).abs() < 1e-9);
    }

    #[test]
    fn duplicated_dev_set_gives_identical_weights() {
        let dev = separable_dev();
        let mut doubled = dev.clone();
        doubled.extend(dev.iter().cloned());
        for kind in [CombinerKind::Ridge, CombinerKind::LinearSvr] {
            let hyper = SvrHyper {
                kind,
                ..SvrHyper::default()
            };
            let a = fit_combiner(&dev, &hyper).unwrap();
            let b = fit_combiner(&doubled, &hyper).unwrap();
            assert_eq!(a.weights, b.weights, "{kind:?}");
            assert_eq!(a.bias, b.bias, "{kind:?}");
        }
    }

    #[test]
    fn single_class_rejected() {
        let dev: Vec<(ScorePair, Label)> =
            (0..12).map(|i| (pair(i as f64, 0.0), Label::Human)).collect();
        assert!(matches!(
            fit_combiner(&dev, &SvrHyper::default()),
            Err(CtError::DegenerateTraining)
        ));
    }

    #[test]
    fn too_small_dev_rejected() {
        let dev = vec![
            (pair(0.0, 0.0), Label::Human),
            (pair(1.0, 1.0), Label::Machine),
        ];
        assert!(matches!(
            fit_combiner(&dev, &SvrHyper::default()),
            Err(CtError::TooFewExamples(2))
        ));
    }

    #[test]
    fn model_serializes_with_expected_shape() {
        let model = fit_combiner(&separable_dev(), &SvrHyper::default()).unwrap();
        let json = serde_json::to_value(&model).unwrap();
        assert!(json.get("kind").is_some());
        assert_eq!(json["weights"].as_array().unwrap().len(), 2);
        assert!(json.get("bias").is_some());
        assert!(json["training_meta"].get("dev_set_hash").is_some());
        let back: CombinerModel = serde_json::from_value(json).unwrap();
        assert_eq!(back, model);
    }
}
