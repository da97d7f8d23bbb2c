//! Fit Gaussian and Student-t models to a score sample and let AIC pick the
//! better tail shape -- the diagnostic that motivates heavy-tailed
//! normalization in the first place.
//!
//! ```sh
//! cargo run --example diagnose_scores
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use tdetect::stats;

fn summarize(name: &str, samples: &[f64]) {
    let report = stats::aic_compare(samples).expect("sample fits");
    println!("== {name} ({} samples) ==", report.n);
    println!("excess kurtosis: {:+.4}", report.excess_kurtosis);
    println!(
        "gaussian: mean {:+.4}, std {:.4}, aic {:.1}",
        report.gauss.mean, report.gauss.std, report.gauss.aic
    );
    println!(
        "student-t: loc {:+.4}, scale {:.4}, nu {:.2}, aic {:.1} ({} iterations)",
        report.student_t.location,
        report.student_t.scale,
        report.student_t.nu_hat,
        report.student_t.aic,
        report.student_t.iterations
    );
    println!(
        "delta AIC (t - gaussian): {:+.2} -> preferred: {:?}\n",
        report.delta_aic, report.preferred
    );
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let light: Vec<f64> = (0..5000).map(|_| normal.sample(&mut rng)).collect();
    summarize("light-tailed sample", &light);

    let student = rand_distr::StudentT::new(4.0).unwrap();
    let heavy: Vec<f64> = (0..5000).map(|_| student.sample(&mut rng)).collect();
    summarize("heavy-tailed sample", &heavy);

    let report = stats::aic_compare(&heavy).unwrap();
    let csv = stats::histogram_csv(&heavy, &report, 30);
    println!("histogram CSV (first lines):");
    for line in csv.lines().take(5) {
        println!("  {line}");
    }
}
