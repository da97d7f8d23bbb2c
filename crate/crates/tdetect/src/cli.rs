//! Command-line plumbing for the `tdetect` binary: config/flag merging,
//! subcommand dispatch, and the exit-code contract.
//!
//! Exit codes: 0 success, 2 config/usage, 3 backend, 4 data. Output files are
//! written to a temp sibling and renamed, so failures never leave partial
//! files behind.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::attack::{self, AttackKind, AttackSpec, VulnerabilityReport};
use crate::backend::{BackendError, RemoteBackend, RemoteConfig, ScoreBackend};
use crate::eval::{self, BenchmarkConfig, EvalError, Label, ScoreCache, SplitSpec};
use crate::scoring::{self, DetectError, Method, ScoreError, DEFAULT_NU};
use crate::{fixture, stats};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;
pub const EXIT_DATA: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Backend(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Backend(_) => EXIT_BACKEND,
            CliError::Data(_) => EXIT_DATA,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Backend(m) | CliError::Data(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("io error: {e}"))
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::Backend(b) => CliError::Backend(b.to_string()),
            DetectError::Score(ScoreError::InvalidNu(nu)) => {
                CliError::Config(format!("nu must exceed 2, got {nu}"))
            }
            DetectError::Score(ScoreError::UnsupportedMethod(m)) => {
                CliError::Config(format!("method '{m}' is not a direct scoring method"))
            }
            DetectError::Score(s) => CliError::Data(s.to_string()),
        }
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Ingest { .. } => CliError::Data(e.to_string()),
            EvalError::Io(io) => CliError::Data(io.to_string()),
            EvalError::Detect(d) => d.into(),
            EvalError::InvalidDevFraction(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Declarative run configuration; every field has a flag override and the
/// flag wins.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub method: String,
    pub nu: f64,
    pub backend: String,
    pub endpoint: Option<String>,
    pub corpus: Option<PathBuf>,
    pub dev_fraction: f64,
    pub seed: u64,
    pub attack: Option<String>,
    pub intensity: f64,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: "t_detect".into(),
            nu: DEFAULT_NU,
            backend: "toy".into(),
            endpoint: None,
            corpus: None,
            dev_fraction: 0.3,
            seed: 0,
            attack: None,
            intensity: 0.5,
            cache_dir: None,
            out_dir: PathBuf::from("."),
            jobs: None,
        }
    }
}

#[derive(Debug, Args, Default, Clone)]
pub struct CommonFlags {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// gaussian | t_detect | binoculars | ct
    #[arg(long)]
    pub method: Option<String>,
    /// Degrees of freedom for t_detect (must exceed 2).
    #[arg(long)]
    pub nu: Option<f64>,
    /// toy | remote
    #[arg(long)]
    pub backend: Option<String>,
    /// Remote backend endpoint URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Labeled corpus (JSONL).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub dev_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Attack kind, comma-separated list, "all", or "none".
    #[arg(long)]
    pub attack: Option<String>,
    #[arg(long)]
    pub intensity: Option<f64>,
    /// Score cache directory; TDETECT_CACHE_DIR is the fallback.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Scoring worker threads (default: available cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl RunConfig {
    /// Loads the optional config file, then overlays the flags.
    pub fn resolve(flags: &CommonFlags) -> Result<Self, CliError> {
        let mut config = match &flags.config {
            Some(path) => {
                let bytes = std::fs::read(path).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                serde_json::from_slice::<RunConfig>(&bytes)
                    .map_err(|e| CliError::Config(format!("invalid config: {e}")))?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = &flags.method {
            config.method = v.clone();
        }
        if let Some(v) = flags.nu {
            config.nu = v;
        }
        if let Some(v) = &flags.backend {
            config.backend = v.clone();
        }
        if let Some(v) = &flags.endpoint {
            config.endpoint = Some(v.clone());
        }
        if let Some(v) = &flags.corpus {
            config.corpus = Some(v.clone());
        }
        if let Some(v) = flags.dev_fraction {
            config.dev_fraction = v;
        }
        if let Some(v) = flags.seed {
            config.seed = v;
        }
        if let Some(v) = &flags.attack {
            config.attack = Some(v.clone());
        }
        if let Some(v) = flags.intensity {
            config.intensity = v;
        }
        if let Some(v) = &flags.cache_dir {
            config.cache_dir = Some(v.clone());
        }
        if config.cache_dir.is_none() {
            if let Ok(env_dir) = std::env::var("TDETECT_CACHE_DIR") {
                if !env_dir.is_empty() {
                    config.cache_dir = Some(PathBuf::from(env_dir));
                }
            }
        }
        if let Some(v) = &flags.out_dir {
            config.out_dir = v.clone();
        }
        if let Some(v) = flags.jobs {
            config.jobs = Some(v);
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let method = self.parsed_method()?;
        if method == Method::TDetect && (self.nu.is_nan() || self.nu <= 2.0) {
            return Err(CliError::Config(format!(
                "nu must exceed 2, got {}",
                self.nu
            )));
        }
        if !matches!(self.backend.as_str(), "toy" | "remote") {
            return Err(CliError::Config(format!(
                "unknown backend '{}' (expected toy or remote)",
                self.backend
            )));
        }
        if self.backend == "remote" && self.endpoint.is_none() {
            return Err(CliError::Config(
                "remote backend requires --endpoint".into(),
            ));
        }
        if let Some(corpus) = &self.corpus {
            if !corpus.exists() {
                return Err(CliError::Config(format!(
                    "corpus path does not exist: {}",
                    corpus.display()
                )));
            }
        }
        Ok(())
    }

    pub fn parsed_method(&self) -> Result<Method, CliError> {
        Method::from_str(&self.method)
            .map_err(|_| CliError::Config(format!("unknown method '{}'", self.method)))
    }

    pub fn build_backend(&self) -> Result<Box<dyn ScoreBackend>, CliError> {
        match self.backend.as_str() {
            "toy" => Ok(Box::new(fixture::fixture_backend())),
            "remote" => {
                let endpoint = self.endpoint.as_deref().expect("validated");
                let remote = RemoteBackend::new(RemoteConfig::new(endpoint, "scoring", "reference"))?;
                Ok(Box::new(remote))
            }
            other => Err(CliError::Config(format!("unknown backend '{other}'"))),
        }
    }
}

/// Writes `contents` to `path` through a temp sibling and an atomic rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp-write");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Parser)]
#[command(
    name = "tdetect",
    about = "Machine-generated text detection: scoring, evaluation, attacks, defense, diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one text or a file of texts; one JSON line per text on stdout.
    Score {
        #[command(flatten)]
        flags: CommonFlags,
        /// Literal text to score.
        text: Option<String>,
        /// File with one text per line.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Benchmark a corpus: split, fit threshold, report metrics.
    Eval {
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Attack machine texts and measure detector failure rates.
    Attack {
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Normalize a text file through the Unicode defense pipeline.
    Normalize {
        #[command(flatten)]
        flags: CommonFlags,
        /// Input file (UTF-8).
        input: PathBuf,
        /// Output path; defaults to `<input>.normalized`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit Gaussian and Student-t models to a file of scores.
    Diagnose {
        #[command(flatten)]
        flags: CommonFlags,
        /// File with one numeric score per line (at least 10).
        input: PathBuf,
    },
}

/// Parses `args` (including argv[0]) and runs; returns the process exit code.
pub fn run_from<I, T>(args: I, stdout: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version; usage errors map to the config
            // exit code.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    match command {
        Command::Score { flags, text, input } => cmd_score(&flags, text, input, stdout),
        Command::Eval { flags } => cmd_eval(&flags, stdout),
        Command::Attack { flags } => cmd_attack(&flags, stdout),
        Command::Normalize {
            flags: _,
            input,
            output,
        } => cmd_normalize(&input, output.as_deref()),
        Command::Diagnose { flags, input } => cmd_diagnose(&flags, &input, stdout),
    }
}

fn cmd_score(
    flags: &CommonFlags,
    text: Option<String>,
    input: Option<PathBuf>,
    stdout: &mut dyn std::io::Write,
) -> Result<(), CliError> {
    let config = RunConfig::resolve(flags)?;
    let method = config.parsed_method()?;
    if method == Method::Ct {
        return Err(CliError::Config(
            "method 'ct' needs a fitted combiner; use the eval subcommand".into(),
        ));
    }
    let backend = config.build_backend()?;

    let texts: Vec<(String, String)> = match (text, input) {
        (Some(t), None) => vec![("text-0".to_string(), t)],
        (None, Some(path)) => {
            let raw = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
            raw.lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| (format!("line-{}", i + 1), l.to_string()))
                .collect()
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "pass either a literal text or --input, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "nothing to score: pass a text or --input FILE".into(),
            ))
        }
    };

    for (id, text) in &texts {
        let series = backend.score_text(text)?;
        let score = match method {
            Method::Gaussian => scoring::gaussian_score(&scoring::discrepancy(&series).map_err(DetectError::from)?)
                .map_err(DetectError::from)?,
            Method::TDetect => {
                scoring::t_detect_score(&scoring::discrepancy(&series).map_err(DetectError::from)?, config.nu)
                    .map_err(DetectError::from)?
            }
            Method::Binoculars => {
                scoring::binoculars_score(&series, &series).map_err(DetectError::from)?
            }
            Method::Ct => unreachable!("rejected above"),
        };
        let mut line = serde_json::json!({
            "id": id,
            "method": method.as_str(),
            "value": score.value,
            "token_count": series.token_count,
            "truncated": series.truncated,
        });
        if let Some(nu) = score.nu {
            line["nu"] = serde_json::json!(nu);
        }
        writeln!(stdout, "{line}")?;
    }
    Ok(())
}

fn cmd_eval(flags: &CommonFlags, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    let config = RunConfig::resolve(flags)?;
    let corpus_path = config
        .corpus
        .as_ref()
        .ok_or_else(|| CliError::Config("eval requires --corpus".into()))?;
    let corpus = eval::load_corpus(corpus_path)?;
    let backend = config.build_backend()?;

    let mut bench = BenchmarkConfig::new(config.parsed_method()?, config.nu);
    bench.split = SplitSpec {
        dev_fraction: config.dev_fraction,
        seed: config.seed,
        ..SplitSpec::default()
    };
    bench.cache = config.cache_dir.as_ref().map(ScoreCache::new);

    let report = match config.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
            pool.install(|| eval::run_benchmark(&corpus, backend.as_ref(), &bench))?
        }
        None => eval::run_benchmark(&corpus, backend.as_ref(), &bench)?,
    };

    std::fs::create_dir_all(&config.out_dir)?;
    write_atomic(&config.out_dir.join("report.json"), &report.to_json())?;
    write_atomic(&config.out_dir.join("report.csv"), &report.to_csv())?;
    write_atomic(&config.out_dir.join("report.md"), &report.to_markdown())?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    writeln!(
        stdout,
        "{}",
        serde_json::to_string(&report.all).expect("row serializes")
    )?;
    Ok(())
}

fn parse_attack_list(raw: &str) -> Result<Vec<Option<AttackKind>>, CliError> {
    let mut kinds = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part == "all" {
            kinds.extend(AttackKind::ALL.iter().copied().map(Some));
        } else if part == "none" {
            kinds.push(None);
        } else {
            let kind = AttackKind::from_str(part)
                .map_err(|e| CliError::Config(e.to_string()))?;
            kinds.push(Some(kind));
        }
    }
    if kinds.is_empty() {
        return Err(CliError::Config("empty attack list".into()));
    }
    Ok(kinds)
}

fn cmd_attack(flags: &CommonFlags, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    let config = RunConfig::resolve(flags)?;
    let corpus_path = config
        .corpus
        .as_ref()
        .ok_or_else(|| CliError::Config("attack requires --corpus".into()))?;
    let attack_list = parse_attack_list(
        config
            .attack
            .as_deref()
            .ok_or_else(|| CliError::Config("attack requires --attack".into()))?,
    )?;
    let corpus = eval::load_corpus(corpus_path)?;
    let backend = config.build_backend()?;
    let method = config.parsed_method()?;
    if method == Method::Ct {
        return Err(CliError::Config(
            "method 'ct' needs a fitted combiner; use a direct method here".into(),
        ));
    }

    // Threshold fitted on the clean corpus.
    let mut clean: Vec<(f64, Label)> = Vec::with_capacity(corpus.records.len());
    for rec in &corpus.records {
        let score = scoring::score_with_backend(backend.as_ref(), &rec.text, method, config.nu)?;
        clean.push((score.value, rec.label));
    }
    let fit = eval::fit_threshold_f1(&clean)?;

    let machine_texts: Vec<String> = corpus
        .records
        .iter()
        .filter(|r| r.label == Label::Machine)
        .map(|r| r.text.clone())
        .collect();
    let detector = |text: &str| -> f64 {
        scoring::score_with_backend(backend.as_ref(), text, method, config.nu)
            .map(|s| s.value)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let baseline = attack::baseline_failure_rate(detector, &machine_texts, fit.threshold);

    let mut rows = Vec::new();
    let mut attacked_lines = String::new();
    for kind in &attack_list {
        match kind {
            Some(kind) => {
                let spec = AttackSpec::new(*kind, config.intensity, config.seed)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let row =
                    attack::failure_rate(detector, &machine_texts, &spec, fit.threshold)
                        .map_err(|e| CliError::Data(e.to_string()))?;
                rows.push(row);
                for rec in &corpus.records {
                    let mut out = rec.clone();
                    if rec.label == Label::Machine {
                        out.text = attack::apply_attack(&rec.text, &spec)
                            .map_err(|e| CliError::Data(e.to_string()))?
                            .text;
                        out.attack = kind.as_str().to_string();
                        out.id = format!("{}-{}", rec.id, kind.as_str());
                    } else {
                        out.id = format!("{}-{}", rec.id, kind.as_str());
                    }
                    attacked_lines
                        .push_str(&serde_json::to_string(&out).expect("record serializes"));
                    attacked_lines.push('\n');
                }
            }
            None => {
                // The identity "attack": failure rate is the clean baseline.
                rows.push(attack::FailureRateRow {
                    attack: "none".into(),
                    failure_rate: baseline,
                    n_texts: machine_texts.len(),
                    threshold: fit.threshold,
                });
            }
        }
    }

    let mut report = VulnerabilityReport {
        rows,
        baseline_failure_rate: baseline,
    };
    report.sort_rows();

    std::fs::create_dir_all(&config.out_dir)?;
    write_atomic(&config.out_dir.join("attacked.jsonl"), &attacked_lines)?;
    write_atomic(
        &config.out_dir.join("vulnerability.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    write_atomic(&config.out_dir.join("vulnerability.csv"), &report.to_csv())?;
    writeln!(
        stdout,
        "{}",
        serde_json::to_string(&report).expect("report serializes")
    )?;
    Ok(())
}

fn cmd_normalize(input: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let bytes = std::fs::read(input)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", input.display())))?;
    let text = String::from_utf8(bytes).map_err(|e| {
        CliError::Data(format!(
            "invalid UTF-8 at byte offset {}",
            e.utf8_error().valid_up_to()
        ))
    })?;
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        out.push_str(&attack::normalize_defense(line));
        out.push('\n');
    }
    let default_path;
    let out_path = match output {
        Some(p) => p,
        None => {
            default_path = PathBuf::from(format!("{}.normalized", input.display()));
            &default_path
        }
    };
    write_atomic(out_path, &out)?;
    Ok(())
}

fn cmd_diagnose(
    flags: &CommonFlags,
    input: &Path,
    stdout: &mut dyn std::io::Write,
) -> Result<(), CliError> {
    let config = RunConfig::resolve(flags)?;
    let raw = std::fs::read_to_string(input)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", input.display())))?;
    let mut samples = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| {
            CliError::Data(format!("non-numeric value at line {}", i + 1))
        })?;
        samples.push(value);
    }
    if samples.len() < 10 {
        return Err(CliError::Config(format!(
            "need at least 10 scores, got {}",
            samples.len()
        )));
    }
    let report = stats::aic_compare(&samples)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let histogram = stats::histogram_csv(&samples, &report, 40);

    std::fs::create_dir_all(&config.out_dir)?;
    write_atomic(
        &config.out_dir.join("fit.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    write_atomic(&config.out_dir.join("histogram.csv"), &histogram)?;
    writeln!(
        stdout,
        "{}",
        serde_json::to_string(&report).expect("report serializes")
    )?;
    Ok(())
}
