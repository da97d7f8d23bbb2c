//! End-to-end benchmark: split, score (with optional caching), fit the
//! threshold (and the two-feature combiner when requested) on the dev half,
//! then report per-group and overall metrics on the held-out half.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{CachedScore, ScoreCache};
use super::metrics::{self, TimingSummary};
use super::{EvalError, Label, LabeledCorpus, SplitSpec};
use crate::backend::ScoreBackend;
use crate::ct::{self, ContentExtractionConfig, CtError, ScorePair, SvrHyper};
use crate::scoring::{self, DetectionScore, Method};

const FPR_CAP: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub method: Method,
    pub nu: f64,
    pub split: SplitSpec,
    pub cache: Option<ScoreCache>,
    /// Base per-text method used to produce the two features when `method`
    /// is the combined one.
    pub base_method: Method,
    pub combiner_hyper: SvrHyper,
    pub content: ContentExtractionConfig,
}

impl BenchmarkConfig {
    pub fn new(method: Method, nu: f64) -> Self {
        Self {
            method,
            nu,
            split: SplitSpec::default(),
            cache: None,
            base_method: Method::TDetect,
            combiner_hyper: SvrHyper::default(),
            content: ContentExtractionConfig::default_list(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GroupMetrics {
    pub group: String,
    pub n: usize,
    /// None on degenerate (single-class) groups.
    pub auroc: Option<f64>,
    pub f1: Option<f64>,
    pub tpr_at_5fpr: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: Method,
    pub nu: Option<f64>,
    pub threshold: f64,
    pub dev_size: usize,
    pub eval_size: usize,
    /// Per-domain rows (plus per-attack rows when attacks are present),
    /// sorted by group name.
    pub rows: Vec<GroupMetrics>,
    /// Metrics over the full held-out half, excluding degenerate domains.
    pub all: GroupMetrics,
    pub timing: TimingSummary,
    pub warnings: Vec<String>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        fn cell(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut out = String::from("group,n,auroc,f1,tpr_at_5fpr,degenerate\n");
        for row in self.rows.iter().chain(std::iter::once(&self.all)) {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.group,
                row.n,
                cell(row.auroc),
                cell(row.f1),
                cell(row.tpr_at_5fpr),
                row.degenerate
            ));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        fn cell(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
        }
        let mut out = String::new();
        out.push_str("| group | n | AUROC | F1 | TPR@5%FPR |\n|---|---|---|---|---|\n");
        for row in self.rows.iter().chain(std::iter::once(&self.all)) {
            let name = if row.degenerate {
                format!("{} (degenerate)", row.group)
            } else {
                row.group.clone()
            };
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                name,
                row.n,
                cell(row.auroc),
                cell(row.f1),
                cell(row.tpr_at_5fpr)
            ));
        }
        out
    }
}

struct RecordScores {
    s_t: f64,
    /// None when the content representation was empty.
    s_c: Option<f64>,
    seconds: f64,
}

fn cached_score(
    backend: &dyn ScoreBackend,
    cache: Option<&ScoreCache>,
    text: &str,
    method: Method,
    nu: f64,
) -> Result<f64, EvalError> {
    let nu_param = if method == Method::TDetect {
        Some(nu)
    } else {
        None
    };
    let key = cache
        .map(|_| ScoreCache::key(text, &backend.descriptor().model_name, method, nu_param));
    if let (Some(cache), Some(key)) = (cache, &key) {
        if let Some(hit) = cache.get(key) {
            return Ok(hit.value);
        }
    }
    let score = scoring::score_with_backend(backend, text, method, nu)?;
    if let (Some(cache), Some(key)) = (cache, &key) {
        cache.put(
            key,
            &CachedScore {
                value: score.value,
                method,
                nu: nu_param,
            },
        )?;
    }
    Ok(score.value)
}

fn score_record(
    backend: &dyn ScoreBackend,
    config: &BenchmarkConfig,
    text: &str,
) -> Result<RecordScores, EvalError> {
    let start = Instant::now();
    let base = if config.method == Method::Ct {
        config.base_method
    } else {
        config.method
    };
    let cache = config.cache.as_ref();
    let s_t = cached_score(backend, cache, text, base, config.nu)?;
    let s_c = if config.method == Method::Ct {
        match ct::extract_content(text, &config.content) {
            Ok(content) => Some(cached_score(backend, cache, &content, base, config.nu)?),
            Err(CtError::EmptyContent) => None,
            Err(e) => return Err(EvalError::Ct(Box::new(e))),
        }
    } else {
        None
    };
    Ok(RecordScores {
        s_t,
        s_c,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn group_metrics(group: &str, scores: &[(f64, Label)], threshold: f64) -> GroupMetrics {
    let has_both = scores.iter().any(|&(_, l)| l == Label::Human)
        && scores.iter().any(|&(_, l)| l == Label::Machine);
    if !has_both {
        return GroupMetrics {
            group: group.to_string(),
            n: scores.len(),
            auroc: None,
            f1: None,
            tpr_at_5fpr: None,
            degenerate: true,
        };
    }
    let (predicted, actual): (Vec<Label>, Vec<Label>) = scores
        .iter()
        .map(|&(s, l)| {
            let p = if s >= threshold {
                Label::Machine
            } else {
                Label::Human
            };
            (p, l)
        })
        .unzip();
    GroupMetrics {
        group: group.to_string(),
        n: scores.len(),
        auroc: Some(metrics::auroc(scores).expect("both classes present")),
        f1: Some(metrics::f1(&predicted, &actual)),
        tpr_at_5fpr: Some(metrics::tpr_at_fpr(scores, FPR_CAP).expect("both classes present")),
        degenerate: false,
    }
}

fn synthetic_score_pair(s_t: f64, s_c: f64, base: Method, nu: f64) -> ScorePair {
    let mk = |value| DetectionScore {
        value,
        method: base,
        nu: if base == Method::TDetect { Some(nu) } else { None },
        elapsed_seconds: 0.0,
    };
    ScorePair {
        s_t: mk(s_t),
        s_c: mk(s_c),
    }
}

/// Runs the full benchmark. Deterministic for a fixed corpus, backend, and
/// configuration, apart from the timing block.
pub fn run_benchmark(
    corpus: &LabeledCorpus,
    backend: &dyn ScoreBackend,
    config: &BenchmarkConfig,
) -> Result<MetricsReport, EvalError> {
    let (dev_idx, eval_idx) = super::split_corpus(corpus, &config.split)?;

    let per_record: Vec<RecordScores> = corpus
        .records
        .par_iter()
        .map(|rec| score_record(backend, config, &rec.text))
        .collect::<Result<Vec<_>, _>>()?;

    let mut warnings = Vec::new();

    // Final scalar score per record.
    let finals: Vec<f64> = if config.method == Method::Ct {
        let dev_pairs: Vec<(ScorePair, Label)> = dev_idx
            .iter()
            .filter_map(|&i| {
                per_record[i].s_c.map(|s_c| {
                    (
                        synthetic_score_pair(
                            per_record[i].s_t,
                            s_c,
                            config.base_method,
                            config.nu,
                        ),
                        corpus.records[i].label,
                    )
                })
            })
            .collect();
        if dev_pairs.len() < dev_idx.len() {
            warnings.push(format!(
                "{} dev records fell back to the text-only feature",
                dev_idx.len() - dev_pairs.len()
            ));
        }
        let combiner = ct::fit_combiner(&dev_pairs, &config.combiner_hyper)
            .map_err(|e| EvalError::Ct(Box::new(e)))?;
        per_record
            .iter()
            .map(|r| match r.s_c {
                Some(s_c) => combiner.predict(r.s_t, s_c),
                None => combiner.weights[0] * r.s_t + combiner.bias,
            })
            .collect()
    } else {
        per_record.iter().map(|r| r.s_t).collect()
    };

    let dev_scores: Vec<(f64, Label)> = dev_idx
        .iter()
        .map(|&i| (finals[i], corpus.records[i].label))
        .collect();
    let fit = metrics::fit_threshold_f1(&dev_scores)?;

    // Group the held-out half by domain, and by attack when any is present.
    let mut domain_groups: BTreeMap<String, Vec<(f64, Label)>> = BTreeMap::new();
    let mut attack_groups: BTreeMap<String, Vec<(f64, Label)>> = BTreeMap::new();
    let any_attack = eval_idx
        .iter()
        .any(|&i| corpus.records[i].attack != "none");
    for &i in &eval_idx {
        let rec = &corpus.records[i];
        let entry = (finals[i], rec.label);
        domain_groups
            .entry(format!("domain:{}", rec.domain))
            .or_default()
            .push(entry);
        if any_attack {
            attack_groups
                .entry(format!("attack:{}", rec.attack))
                .or_default()
                .push(entry);
        }
    }

    let mut rows = Vec::new();
    let mut all_scores: Vec<(f64, Label)> = Vec::new();
    for (name, scores) in &domain_groups {
        let row = group_metrics(name, scores, fit.threshold);
        if row.degenerate {
            warnings.push(format!(
                "group '{name}' has a single class; excluded from the overall row"
            ));
        } else {
            all_scores.extend_from_slice(scores);
        }
        rows.push(row);
    }
    for (name, scores) in &attack_groups {
        rows.push(group_metrics(name, scores, fit.threshold));
    }

    let all = group_metrics("ALL", &all_scores, fit.threshold);
    let durations: Vec<f64> = per_record.iter().map(|r| r.seconds).collect();
    let timing = metrics::timing_stats(&durations)?;

    Ok(MetricsReport {
        method: config.method,
        nu: if config.method == Method::TDetect
            || (config.method == Method::Ct && config.base_method == Method::TDetect)
        {
            Some(config.nu)
        } else {
            None
        },
        threshold: fit.threshold,
        dev_size: dev_idx.len(),
        eval_size: eval_idx.len(),
        rows,
        all,
        timing,
        warnings,
    })
}
