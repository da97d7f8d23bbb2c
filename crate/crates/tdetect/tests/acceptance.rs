//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture` to
//! see the lines.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use tdetect::attack::{self, AttackKind, AttackSpec};
use tdetect::ct::{self, CombinerKind, ScorePair, SvrHyper};
use tdetect::eval::{self, Label};
use tdetect::fixture;
use tdetect::scoring::{self, Discrepancy, Method};
use tdetect::stats;

fn check(name: &str, body: impl FnOnce() + std::panic::UnwindSafe) {
    match std::panic::catch_unwind(body) {
        Ok(()) => println!("acceptance: {name}: PASS"),
        Err(e) => {
            println!("acceptance: {name}: FAIL");
            std::panic::resume_unwind(e);
        }
    }
}

fn disc(d: f64, v: f64) -> Discrepancy {
    Discrepancy {
        d,
        v,
        token_count: 1,
    }
}

fn ulp_distance(a: f64, b: f64) -> u64 {
    let to_ordered = |x: f64| {
        let bits = x.to_bits() as i64;
        if bits < 0 { i64::MIN - bits } else { bits }
    };
    (to_ordered(a) - to_ordered(b)).unsigned_abs()
}

#[test]
fn criterion_01_heavy_tail_score_arithmetic() {
    check("1 heavy-tail score arithmetic and exact scale relation", || {
        let t = scoring::t_detect_score(&disc(1.0, 1.0), 5.0).unwrap();
        assert!(
            (t.value - 0.774_596_669_241_483_3).abs() < 1e-12,
            "t = {}",
            t.value
        );

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let d = rng.gen_range(-50.0..50.0);
            let v = rng.gen_range(1e-3..100.0);
            let nu = rng.gen_range(2.01..50.0);
            let g = scoring::gaussian_score(&disc(d, v)).unwrap().value;
            let t = scoring::t_detect_score(&disc(d, v), nu).unwrap().value;
            let expected = g * ((nu - 2.0) / nu).sqrt();
            assert!(
                ulp_distance(t, expected) <= 1,
                "d={d} v={v} nu={nu}: {t} vs {expected}"
            );
        }
    });
}

#[test]
fn criterion_02_auroc_flat_in_degrees_of_freedom() {
    check("2 AUROC identical across degrees of freedom", || {
        let corpus = fixture::synthetic_corpus(15, 2).unwrap();
        let backend = fixture::fixture_backend();
        use tdetect::backend::ScoreBackend;
        let discs: Vec<(Discrepancy, Label)> = corpus
            .records
            .iter()
            .map(|rec| {
                let series = backend.score_text(&rec.text).unwrap();
                (scoring::discrepancy(&series).unwrap(), rec.label)
            })
            .collect();
        let auroc_for = |nu: f64| {
            let scores: Vec<(f64, Label)> = discs
                .iter()
                .map(|(d, l)| (scoring::t_detect_score(d, nu).unwrap().value, *l))
                .collect();
            eval::auroc(&scores).unwrap()
        };
        let base = auroc_for(5.0);
        assert!(base > 0.5, "fixture corpus should be separable, got {base}");
        for nu in [3.0, 4.0, 6.0, 7.0] {
            assert!(
                (auroc_for(nu) - base).abs() < 1e-12,
                "nu={nu}: {} vs {base}",
                auroc_for(nu)
            );
        }
    });
}

#[test]
fn criterion_03_gaussian_limit() {
    check("3 convergence to the Gaussian score at large nu", || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let d = rng.gen_range(-50.0..50.0);
            let v = rng.gen_range(1e-3..100.0);
            let g = scoring::gaussian_score(&disc(d, v)).unwrap().value;
            let t = scoring::t_detect_score(&disc(d, v), 1e6).unwrap().value;
            // The exact deviation is (1 - sqrt(1 - 2/nu))·|g|, which at
            // nu = 1e6 is 1.0000005e-6·|g|; allow that half-part-per-million
            // above the nominal 1e-6 bound.
            assert!(
                (t - g).abs() < 1e-6 * g.abs() * (1.0 + 1e-6),
                "d={d} v={v}: {t} vs {g}"
            );
        }
    });
}

#[test]
fn criterion_04_aic_model_selection_regimes() {
    check("4 AIC selects gaussian on normal data, t on heavy tails", || {
        let normal: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(16);
            let dist = rand_distr::Normal::new(0.0, 1.0).unwrap();
            (0..5000).map(|_| dist.sample(&mut rng)).collect()
        };
        let report = stats::aic_compare(&normal).unwrap();
        assert!(
            (report.delta_aic - 2.0).abs() <= 1.5,
            "delta = {}",
            report.delta_aic
        );
        assert_eq!(report.preferred, stats::PreferredModel::Gaussian);

        let heavy: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let dist = rand_distr::StudentT::new(4.0).unwrap();
            (0..5000).map(|_| dist.sample(&mut rng)).collect()
        };
        let report = stats::aic_compare(&heavy).unwrap();
        assert!(report.delta_aic < -20.0, "delta = {}", report.delta_aic);
        assert_eq!(report.preferred, stats::PreferredModel::TDistribution);
    });
}

#[test]
fn criterion_05_kurtosis_oracle() {
    check("5 excess kurtosis closed-form and sampling oracle", || {
        assert_eq!(
            stats::excess_kurtosis(&[-1.0, 1.0, -1.0, 1.0]).unwrap(),
            -2.0
        );
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let dist = rand_distr::StudentT::new(8.0).unwrap();
        let sample: Vec<f64> = (0..100_000).map(|_| dist.sample(&mut rng)).collect();
        let g2 = stats::excess_kurtosis(&sample).unwrap();
        assert!((g2 - 1.5).abs() <= 0.25, "g2 = {g2}");
    });
}

#[test]
fn criterion_06_t_mle_recovery() {
    check("6 t maximum-likelihood recovery with monotone trace", || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dist = rand_distr::StudentT::new(5.0).unwrap();
        let sample: Vec<f64> = (0..100_000).map(|_| dist.sample(&mut rng)).collect();
        let fit = stats::fit_student_t(&sample).unwrap();
        assert!(
            fit.nu_hat >= 4.5 && fit.nu_hat <= 5.5,
            "nu_hat = {}",
            fit.nu_hat
        );
        assert!(fit.location.abs() <= 0.02, "loc = {}", fit.location);
        for pair in fit.loglik_trace.windows(2) {
            assert!(
                pair[1] >= pair[0] - 1e-9,
                "trace decreased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    });
}

fn brute_auroc(scores: &[(f64, Label)]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0u64;
    for &(m, lm) in scores {
        if lm != Label::Machine {
            continue;
        }
        for &(h, lh) in scores {
            if lh != Label::Human {
                continue;
            }
            pairs += 1;
            if m > h {
                total += 1.0;
            } else if m == h {
                total += 0.5;
            }
        }
    }
    total / pairs as f64
}

fn brute_confusion(scores: &[(f64, Label)], t: f64) -> (f64, f64, f64) {
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for &(s, l) in scores {
        match (s >= t, l) {
            (true, Label::Machine) => tp += 1,
            (true, Label::Human) => fp += 1,
            (false, Label::Machine) => fn_ += 1,
            (false, Label::Human) => tn += 1,
        }
    }
    let f1 = if 2 * tp + fp + fn_ == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    };
    let tpr = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let fpr = if fp + tn == 0 {
        0.0
    } else {
        fp as f64 / (fp + tn) as f64
    };
    (f1, tpr, fpr)
}

#[test]
fn criterion_07_metric_brute_force_oracles() {
    check("7 metrics match exhaustive brute force exactly", || {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..50 {
            let n = 4 + trial % 37;
            let scores: Vec<(f64, Label)> = (0..n)
                .map(|i| {
                    let s = (rng.gen_range(-8..8) as f64) / 4.0;
                    let l = if i % 2 == 0 { Label::Human } else { Label::Machine };
                    (s, l)
                })
                .collect();

            assert_eq!(eval::auroc(&scores).unwrap(), brute_auroc(&scores));

            // Threshold search: evaluate every candidate directly and apply
            // the same tie-break (F1, then TPR, then lower threshold).
            let mut distinct: Vec<f64> = scores.iter().map(|&(s, _)| s).collect();
            distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
            distinct.dedup();
            let mut candidates = vec![f64::NEG_INFINITY, f64::INFINITY];
            for w in distinct.windows(2) {
                candidates.push(0.5 * (w[0] + w[1]));
            }
            let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::INFINITY);
            for &t in &candidates {
                let (f1, tpr, _) = brute_confusion(&scores, t);
                if f1 > best.0
                    || (f1 == best.0 && tpr > best.1)
                    || (f1 == best.0 && tpr == best.1 && t < best.2)
                {
                    best = (f1, tpr, t);
                }
            }
            let fit = eval::fit_threshold_f1(&scores).unwrap();
            assert_eq!(fit.f1, best.0);
            assert_eq!(fit.threshold, best.2);

            let mut brute_tpr5 = 0.0f64;
            let mut thresholds: Vec<f64> = scores.iter().map(|&(s, _)| s).collect();
            thresholds.push(f64::INFINITY);
            for &t in &thresholds {
                let (_, tpr, fpr) = brute_confusion(&scores, t);
                if fpr <= 0.05 {
                    brute_tpr5 = brute_tpr5.max(tpr);
                }
            }
            assert_eq!(eval::tpr_at_fpr(&scores, 0.05).unwrap(), brute_tpr5);
        }
    });
}

fn ascii_clean_texts(n: usize) -> Vec<String> {
    let sentences = fixture::fixture_sentences();
    (0..n)
        .map(|i| {
            let base = &sentences[i % sentences.len()];
            format!("{base} Sample number {i} for the robustness sweep.")
        })
        .collect()
}

#[test]
fn criterion_08_attack_defense_round_trip() {
    check("8 unicode defense inverts invisible and lookalike attacks", || {
        let texts = ascii_clean_texts(200);
        for kind in [AttackKind::ZeroWidthSpace, AttackKind::Homoglyph] {
            let spec = AttackSpec::new(kind, 1.0, 88).unwrap();
            for text in &texts {
                let attacked = attack::apply_attack(text, &spec).unwrap();
                let restored = attack::normalize_defense(&attacked.text);
                assert_eq!(&restored, text, "{kind:?} not inverted");
            }
        }
        for text in &texts {
            let once = attack::normalize_defense(text);
            assert_eq!(attack::normalize_defense(&once), once);
        }
    });
}

#[test]
fn criterion_09_vulnerability_directionality() {
    check("9 invisible-character attack is the most damaging direction", || {
        use tdetect::backend::ScoreBackend;
        let corpus = fixture::synthetic_corpus(15, 9).unwrap();
        let backend = fixture::fixture_backend();
        let score_of = |text: &str| -> f64 {
            scoring::score_with_backend(&backend, text, Method::TDetect, 5.0)
                .map(|s| s.value)
                .unwrap_or(f64::NEG_INFINITY)
        };
        let clean: Vec<(f64, Label)> = corpus
            .records
            .iter()
            .map(|r| (score_of(&r.text), r.label))
            .collect();
        let fit = eval::fit_threshold_f1(&clean).unwrap();
        let machine_texts: Vec<String> = corpus
            .records
            .iter()
            .filter(|r| r.label == Label::Machine)
            .map(|r| r.text.clone())
            .collect();
        let baseline = attack::baseline_failure_rate(score_of, &machine_texts, fit.threshold);

        let mut rates = Vec::new();
        for kind in AttackKind::ALL {
            let spec = AttackSpec::new(kind, 1.0, 99).unwrap();
            let row =
                attack::failure_rate(score_of, &machine_texts, &spec, fit.threshold).unwrap();
            rates.push((kind, row.failure_rate));
        }
        let zero_width = rates
            .iter()
            .find(|(k, _)| *k == AttackKind::ZeroWidthSpace)
            .unwrap()
            .1;
        assert!(
            zero_width > baseline,
            "zero-width rate {zero_width} vs baseline {baseline}"
        );
        for (kind, rate) in &rates {
            assert!(
                *rate >= baseline,
                "{kind:?} rate {rate} below clean baseline {baseline}"
            );
        }
        let _ = backend.descriptor();
    });
}

#[test]
fn criterion_10_two_feature_combination_stability() {
    check("10 combined text/content detector is stable and non-degrading", || {
        use tdetect::backend::ScoreBackend;
        let corpus = fixture::synthetic_corpus(20, 10).unwrap();
        let backend = fixture::fixture_backend();
        let content_config = ct::ContentExtractionConfig::default_list();

        // Features per record for a given nu; None content falls back to s_t.
        let features = |nu: f64| -> Vec<([f64; 2], Label)> {
            corpus
                .records
                .iter()
                .map(|rec| {
                    let series = backend.score_text(&rec.text).unwrap();
                    let s_t = scoring::t_detect_score(
                        &scoring::discrepancy(&series).unwrap(),
                        nu,
                    )
                    .unwrap()
                    .value;
                    let s_c = match ct::extract_content(&rec.text, &content_config) {
                        Ok(content) => {
                            let cs = backend.score_text(&content).unwrap();
                            scoring::t_detect_score(&scoring::discrepancy(&cs).unwrap(), nu)
                                .unwrap()
                                .value
                        }
                        Err(_) => s_t,
                    };
                    ([s_t, s_c], rec.label)
                })
                .collect()
        };

        let (dev_idx, eval_idx) =
            eval::split_corpus(&corpus, &eval::SplitSpec::default()).unwrap();
        let hyper = SvrHyper {
            kind: CombinerKind::LinearSvr,
            ..SvrHyper::default()
        };

        let run = |nu: f64| -> (f64, f64, f64, f64) {
            let feats = features(nu);
            let dev_pairs: Vec<(ScorePair, Label)> = dev_idx
                .iter()
                .map(|&i| {
                    (
                        ScorePair {
                            s_t: tdetect::DetectionScore {
                                value: feats[i].0[0],
                                method: Method::TDetect,
                                nu: Some(nu),
                                elapsed_seconds: 0.0,
                            },
                            s_c: tdetect::DetectionScore {
                                value: feats[i].0[1],
                                method: Method::TDetect,
                                nu: Some(nu),
                                elapsed_seconds: 0.0,
                            },
                        },
                        feats[i].1,
                    )
                })
                .collect();
            let model = ct::fit_combiner(&dev_pairs, &hyper).unwrap();
            let combined = |idx: &[usize]| -> Vec<(f64, Label)> {
                idx.iter()
                    .map(|&i| (model.predict(feats[i].0[0], feats[i].0[1]), feats[i].1))
                    .collect()
            };
            let t_only = |idx: &[usize]| -> Vec<(f64, Label)> {
                idx.iter().map(|&i| (feats[i].0[0], feats[i].1)).collect()
            };
            let c_only = |idx: &[usize]| -> Vec<(f64, Label)> {
                idx.iter().map(|&i| (feats[i].0[1], feats[i].1)).collect()
            };
            (
                eval::auroc(&combined(&dev_idx)).unwrap(),
                eval::auroc(&t_only(&dev_idx)).unwrap(),
                eval::auroc(&c_only(&dev_idx)).unwrap(),
                eval::auroc(&combined(&eval_idx)).unwrap(),
            )
        };

        let (ct_dev, t_dev, c_dev, ct_eval_5) = run(5.0);
        assert!(
            ct_dev >= t_dev.max(c_dev) - 0.01,
            "combined dev {ct_dev} vs singles {t_dev}/{c_dev}"
        );
        let (_, _, _, ct_eval_3) = run(3.0);
        assert!(
            (ct_eval_5 - ct_eval_3).abs() <= 0.02,
            "eval AUROC moved {ct_eval_5} -> {ct_eval_3} after rescaling"
        );
    });
}

fn write_fixture_corpus_file(path: &std::path::Path, n_per_class: usize, seed: u64) {
    let corpus = fixture::synthetic_corpus(n_per_class, seed).unwrap();
    let mut out = String::new();
    for rec in &corpus.records {
        out.push_str(&serde_json::to_string(rec).unwrap());
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}

fn report_without_timing(path: &std::path::Path) -> String {
    let mut value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    value["timing"] = serde_json::Value::Null;
    serde_json::to_string_pretty(&value).unwrap()
}

#[test]
fn criterion_11_end_to_end_determinism() {
    check("11 repeated evaluation runs are byte-identical modulo timing", || {
        let dir = tempfile::tempdir().unwrap();
        let corpus_path = dir.path().join("corpus.jsonl");
        write_fixture_corpus_file(&corpus_path, 12, 11);
        let mut reports = Vec::new();
        for run in 0..2 {
            let out_dir = dir.path().join(format!("run{run}"));
            let mut stdout = Vec::new();
            let code = tdetect::cli::run_from(
                [
                    "tdetect",
                    "eval",
                    "--corpus",
                    corpus_path.to_str().unwrap(),
                    "--method",
                    "t_detect",
                    "--nu",
                    "5",
                    "--seed",
                    "17",
                    "--out-dir",
                    out_dir.to_str().unwrap(),
                ],
                &mut stdout,
            );
            assert_eq!(code, 0, "eval run failed");
            reports.push(report_without_timing(&out_dir.join("report.json")));
        }
        assert_eq!(reports[0], reports[1]);
    });
}

#[test]
fn criterion_12_timing_summary_closed_form() {
    check("12 timing summary matches the closed-form oracle", || {
        // Known per-text durations stand in for a backend with fixed delays;
        // the summary must match the hand-computed statistics.
        let durations = [0.010, 0.020, 0.030, 0.050, 0.090];
        let t = eval::timing_stats(&durations).unwrap();
        let n = durations.len() as f64;
        let total: f64 = durations.iter().sum();
        let mean = total / n;
        let var = durations.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        assert!((t.mean_seconds - mean).abs() < 1e-9);
        assert!((t.std_seconds - var.sqrt()).abs() < 1e-9);
        assert!((t.throughput - n / total).abs() < 1e-9);
    });
}
