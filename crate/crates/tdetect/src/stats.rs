//! Distribution diagnostics for detector score samples: excess kurtosis,
//! Gaussian and location-scale Student-t maximum-likelihood fits, and
//! AIC-based model selection between the two.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};
use thiserror::Error;

/// Below this sample variance a fit is treated as degenerate.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Degrees-of-freedom search interval for the t fit.
pub const NU_MIN: f64 = 2.01;
pub const NU_MAX: f64 = 1000.0;

const MAX_ECME_ITERATIONS: usize = 500;
const PARAM_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("sample variance below floor; fit degenerate")]
    DegenerateSample,
    #[error("t fit did not converge within {MAX_ECME_ITERATIONS} iterations (last: loc={location}, scale={scale}, nu={nu})")]
    FitDiverged { location: f64, scale: f64, nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mean: f64,
    /// Population (MLE) standard deviation.
    pub std: f64,
    pub loglik: f64,
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentTFit {
    pub location: f64,
    pub scale: f64,
    pub nu_hat: f64,
    pub loglik: f64,
    pub aic: f64,
    /// True when the fit ran into the upper bound of the nu search interval,
    /// where the likelihood is flat and the t model is indistinguishable from
    /// a Gaussian.
    pub gaussian_equivalent: bool,
    pub iterations: usize,
    /// Log-likelihood after each ECME iteration; non-decreasing.
    pub loglik_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferredModel {
    TDistribution,
    Gaussian,
}

/// Kurtosis and model-selection report for one score sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n: usize,
    pub excess_kurtosis: f64,
    pub gauss: GaussianFit,
    pub student_t: StudentTFit,
    /// `aic_t - aic_gauss`; negative favors the t model.
    pub delta_aic: f64,
    pub preferred: PreferredModel,
}

/// Bias-uncorrected excess kurtosis `m4/m2^2 - 3`.
pub fn excess_kurtosis(samples: &[f64]) -> Result<f64, StatsError> {
    if samples.len() < 4 {
        return Err(StatsError::InsufficientData {
            needed: 4,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if m2 < VARIANCE_FLOOR {
        return Err(StatsError::DegenerateSample);
    }
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Ok(m4 / (m2 * m2) - 3.0)
}

/// Closed-form Gaussian MLE with log-likelihood at the optimum.
pub fn fit_gaussian(samples: &[f64]) -> Result<GaussianFit, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::InsufficientData {
            needed: 2,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var < VARIANCE_FLOOR {
        return Err(StatsError::DegenerateSample);
    }
    let loglik = -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + var.ln() + 1.0);
    Ok(GaussianFit {
        mean,
        std: var.sqrt(),
        loglik,
        aic: 4.0 - 2.0 * loglik,
    })
}

fn t_loglik(samples: &[f64], loc: f64, scale: f64, nu: f64) -> f64 {
    let constant = ln_gamma((nu + 1.0) / 2.0)
        - ln_gamma(nu / 2.0)
        - 0.5 * (nu * std::f64::consts::PI).ln()
        - scale.ln();
    let mut sum = 0.0;
    for &x in samples {
        let z = (x - loc) / scale;
        sum += (1.0 + z * z / nu).ln();
    }
    samples.len() as f64 * constant - 0.5 * (nu + 1.0) * sum
}

/// Derivative of the t log-likelihood with respect to nu at fixed
/// location/scale.
fn t_loglik_dnu(samples: &[f64], loc: f64, scale: f64, nu: f64) -> f64 {
    let constant = digamma((nu + 1.0) / 2.0) - digamma(nu / 2.0) - 1.0 / nu;
    let mut sum = 0.0;
    for &x in samples {
        let z2 = ((x - loc) / scale).powi(2);
        sum += constant - (1.0 + z2 / nu).ln() + (nu + 1.0) * z2 / (nu * (nu + z2));
    }
    0.5 * sum
}

/// Maximizes the profile likelihood over nu by bisection on its derivative.
fn profile_nu(samples: &[f64], loc: f64, scale: f64) -> f64 {
    let mut lo = NU_MIN;
    let mut hi = NU_MAX;
    let d_lo = t_loglik_dnu(samples, loc, scale, lo);
    if d_lo <= 0.0 {
        return lo;
    }
    let d_hi = t_loglik_dnu(samples, loc, scale, hi);
    if d_hi >= 0.0 {
        return hi;
    }
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if t_loglik_dnu(samples, loc, scale, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 * lo {
            break;
        }
    }
    (lo * hi).sqrt()
}

/// MLE of the three-parameter location-scale Student-t via ECME iteration.
///
/// Each iteration reweights samples by `(nu+1)/(nu+z^2)`, updates location
/// and scale from the weighted moments, then updates nu by root-finding on
/// the profile likelihood over `[NU_MIN, NU_MAX]`. Steps that would lower
/// the likelihood keep the previous nu, so the trace is non-decreasing.
pub fn fit_student_t(samples: &[f64]) -> Result<StudentTFit, StatsError> {
    if samples.len() < 10 {
        return Err(StatsError::InsufficientData {
            needed: 10,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var < VARIANCE_FLOOR {
        return Err(StatsError::DegenerateSample);
    }

    let mut loc = mean;
    let mut scale = var.sqrt();
    let mut nu = 10.0;
    let mut loglik = t_loglik(samples, loc, scale, nu);
    let mut trace = vec![loglik];

    for iter in 1..=MAX_ECME_ITERATIONS {
        // E-step weights, then weighted mean/scale updates.
        let mut w_sum = 0.0;
        let mut wx_sum = 0.0;
        for &x in samples {
            let z = (x - loc) / scale;
            let w = (nu + 1.0) / (nu + z * z);
            w_sum += w;
            wx_sum += w * x;
        }
        let new_loc = wx_sum / w_sum;
        let mut wss = 0.0;
        for &x in samples {
            let z = (x - loc) / scale;
            let w = (nu + 1.0) / (nu + z * z);
            wss += w * (x - new_loc) * (x - new_loc);
        }
        let new_scale = (wss / n).sqrt().max(VARIANCE_FLOOR.sqrt());

        let new_nu = profile_nu(samples, new_loc, new_scale, );
        let mut candidate = t_loglik(samples, new_loc, new_scale, new_nu);
        let chosen_nu = if candidate + 1e-12 < t_loglik(samples, new_loc, new_scale, nu) {
            // Keep the previous nu if the profile step did not improve.
            candidate = t_loglik(samples, new_loc, new_scale, nu);
            nu
        } else {
            new_nu
        };

        let delta = (new_loc - loc)
            .abs()
            .max((new_scale - scale).abs())
            .max((chosen_nu - nu).abs());
        loc = new_loc;
        scale = new_scale;
        nu = chosen_nu;
        loglik = candidate;
        trace.push(loglik);

        if delta < PARAM_TOL {
            return Ok(StudentTFit {
                location: loc,
                scale,
                nu_hat: nu,
                loglik,
                aic: 6.0 - 2.0 * loglik,
                gaussian_equivalent: nu >= NU_MAX,
                iterations: iter,
                loglik_trace: trace,
            });
        }
        // The likelihood is flat in nu near the Gaussian boundary; stop once
        // location/scale have settled there.
        if nu >= NU_MAX && delta < 1e-6 {
            return Ok(StudentTFit {
                location: loc,
                scale,
                nu_hat: nu,
                loglik,
                aic: 6.0 - 2.0 * loglik,
                gaussian_equivalent: true,
                iterations: iter,
                loglik_trace: trace,
            });
        }
    }
    Err(StatsError::FitDiverged {
        location: loc,
        scale,
        nu,
    })
}

/// Fits both models and reports kurtosis, AIC values, and the preferred
/// model.
pub fn aic_compare(samples: &[f64]) -> Result<FitReport, StatsError> {
    let excess = excess_kurtosis(samples)?;
    let gauss = fit_gaussian(samples)?;
    let student_t = fit_student_t(samples)?;
    let delta_aic = student_t.aic - gauss.aic;
    let preferred = if delta_aic < 0.0 {
        PreferredModel::TDistribution
    } else {
        PreferredModel::Gaussian
    };
    Ok(FitReport {
        n: samples.len(),
        excess_kurtosis: excess,
        gauss,
        student_t,
        delta_aic,
        preferred,
    })
}

/// Gaussian density, used for the plot-ready histogram output.
pub fn gaussian_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
}

/// Location-scale Student-t density.
pub fn student_t_pdf(x: f64, loc: f64, scale: f64, nu: f64) -> f64 {
    let z = (x - loc) / scale;
    let log_pdf = ln_gamma((nu + 1.0) / 2.0)
        - ln_gamma(nu / 2.0)
        - 0.5 * (nu * std::f64::consts::PI).ln()
        - scale.ln()
        - 0.5 * (nu + 1.0) * (1.0 + z * z / nu).ln();
    log_pdf.exp()
}

/// Renders a histogram of the sample with both fitted densities evaluated at
/// bin centers, as CSV with header
/// `bin_left,bin_right,count,gauss_pdf,t_pdf`.
pub fn histogram_csv(samples: &[f64], report: &FitReport, bins: usize) -> String {
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let idx = (((x - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let mut out = String::from("bin_left,bin_right,count,gauss_pdf,t_pdf\n");
    for (i, count) in counts.iter().enumerate() {
        let left = min + i as f64 * width;
        let right = left + width;
        let center = (left + right) / 2.0;
        let g = gaussian_pdf(center, report.gauss.mean, report.gauss.std);
        let t = student_t_pdf(
            center,
            report.student_t.location,
            report.student_t.scale,
            report.student_t.nu_hat,
        );
        out.push_str(&format!("{left},{right},{count},{g},{t}\n"));
    }
    out
}
