//! Score a single text with each detection method.
//!
//! ```sh
//! cargo run --example score_text -- "The quick brown fox jumps over the lazy dog."
//! ```

use tdetect::backend::ScoreBackend;
use tdetect::fixture;
use tdetect::scoring::{self, Method, DEFAULT_NU};

fn main() {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "The quick brown fox jumps over the lazy dog.".to_string());

    let backend = fixture::fixture_backend();
    println!("backend: {:?}", backend.descriptor().model_name);

    let series = backend.score_text(&text).expect("text scores");
    let disc = scoring::discrepancy(&series).expect("non-empty series");
    println!(
        "tokens: {} (truncated: {}), d = {:.4}, v = {:.4}",
        series.token_count, series.truncated, disc.d, disc.v
    );

    for method in [Method::Gaussian, Method::TDetect, Method::Binoculars] {
        let score = scoring::score_with_backend(&backend, &text, method, DEFAULT_NU)
            .expect("method applies");
        match score.nu {
            Some(nu) => println!("{:>11}: {:+.6} (nu = {nu})", method.as_str(), score.value),
            None => println!("{:>11}: {:+.6}", method.as_str(), score.value),
        }
    }

    // The heavy-tailed score is a fixed positive multiple of the z-score, so
    // the two never disagree about ordering -- only about calibration.
    let g = scoring::gaussian_score(&disc).unwrap().value;
    for nu in [3.0, 5.0, 10.0, 100.0] {
        let t = scoring::t_detect_score(&disc, nu).unwrap().value;
        println!("nu = {nu:>5}: t = {t:+.6}, ratio to z = {:.6}", t / g);
    }
}
