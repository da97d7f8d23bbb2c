//! Run the full benchmark on the built-in synthetic corpus: stratified
//! dev/eval split, threshold fitting on dev, per-group metrics on eval.
//!
//! ```sh
//! cargo run --example evaluate_corpus
//! ```

use tdetect::eval::{run_benchmark, BenchmarkConfig};
use tdetect::fixture;
use tdetect::scoring::Method;

fn main() {
    let corpus = fixture::synthetic_corpus(25, 7).expect("fixture corpus builds");
    let backend = fixture::fixture_backend();

    for method in [Method::Gaussian, Method::TDetect] {
        let config = BenchmarkConfig::new(method, 5.0);
        let report = run_benchmark(&corpus, &backend, &config).expect("benchmark runs");
        println!("== {} ==", method.as_str());
        println!(
            "dev {} / eval {}, threshold {:.4}",
            report.dev_size, report.eval_size, report.threshold
        );
        println!("{}", report.to_markdown());
        println!(
            "timing: mean {:.3} ms/text, throughput {:.0} texts/s",
            report.timing.mean_seconds * 1e3,
            report.timing.throughput
        );
    }
}
