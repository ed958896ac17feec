//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triage::analytics::{
    chi_square, fit_trend, numeric_severity, user_histories, ContingencyTable2x2, MonthlyPoint, SeverityScale,
};
use triage::corpus::stratified_folds;
use triage::ensemble::{default_specs, train_ensemble, vote, FeatureSetSpec, ResourceOptions};
use triage::eval::{macro_f1_nongreen, score_predictions};
use triage::gbt::{grow_tree, softmax_grad_hess, softmax_loss, train, FeatureMatrix, TrainConfig};
use triage::synthgen::{generate, SynthConfig};
use triage::topics::{lda_infer, lda_train, LdaConfig};
use triage::SeverityLabel;

mod common;
use common::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn chi_square_reproduction() -> Outcome {
    let cases = [
        ([[120, 46], [78, 208]], 86.47, 0.05),
        ([[40, 31], [64, 317]], 52.82, 0.05),
        ([[30, 16], [126, 280]], 21.4, 0.5),
        ([[93, 37], [105, 220]], 58.4, 0.5),
    ];
    let mut got = Vec::new();
    let mut ok = true;
    for (cells, want, tol) in cases {
        let c = chi_square(&ContingencyTable2x2 { cells }).map_err(|e| e.to_string())?;
        ok &= (c.statistic - want).abs() <= tol;
        got.push(format!("{:.3} (want {want} +/- {tol})", c.statistic));
    }
    check(ok, got.join(", "))
}

fn metric_identity() -> Outcome {
    // per-class F1 in GREEN, AMBER, RED, CRISIS order; GREEN does not enter
    let m = macro_f1_nongreen(&[0.9, 0.761, 0.755, 0.0]);
    check(
        (m * 1000.0).round() / 1000.0 == 0.505,
        format!("macro_f1_nongreen = {m:.4}"),
    )
}

fn severity_mapping() -> Outcome {
    let got: Vec<f64> = [SeverityLabel::Crisis, SeverityLabel::Red, SeverityLabel::Amber, SeverityLabel::Green]
        .into_iter()
        .map(numeric_severity)
        .collect();
    check(got == [1.0, 0.66, 0.33, 0.0], format!("{got:?}"))
}

fn gbt_suite() -> Outcome {
    let t0 = Instant::now();
    // (a) gradients and hessians against central differences
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m: Vec<f64> = (0..4).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let y = rng.gen_range(0..4);
        let (g, h) = softmax_grad_hess(&m, y);
        for c in 0..4 {
            let bump = |d: f64| {
                let mut mm = m.clone();
                mm[c] += d;
                mm
            };
            let fd_g = (softmax_loss(&bump(eps), y) - softmax_loss(&bump(-eps), y)) / (2.0 * eps);
            let fd_h = (softmax_grad_hess(&bump(eps), y).0[c] - softmax_grad_hess(&bump(-eps), y).0[c]) / (2.0 * eps);
            worst = worst.max((g[c] - fd_g).abs() / fd_g.abs().max(1e-3));
            worst = worst.max((h[c] - fd_h).abs() / fd_h.abs().max(1e-3));
        }
    }
    if worst > 1e-4 {
        return Err(format!("(a) worst relative error {worst:.2e}"));
    }
    // (b) root split against exhaustive search
    for seed in 0..200u64 {
        let n = 2 + (seed as usize * 13) % 63;
        let d = 1 + (seed as usize * 5) % 8;
        let (rows, g, h) = random_problem(10_000 + seed, n, d);
        let cfg = TrainConfig {
            max_depth: 1,
            min_child_weight: 0.0,
            ..TrainConfig::default()
        };
        let x = FeatureMatrix::from_dense(&rows).map_err(|e| e.to_string())?;
        let tree = grow_tree(&g, &h, &x, &cfg).map_err(|e| e.to_string())?;
        match (tree.root_split(), brute_force_split(&rows, &g, &h, &cfg)) {
            (None, None) => {}
            (Some((f, thr)), Some((_, _, best))) => {
                let got = gain_of(&rows, &g, &h, f, thr, &cfg);
                if (got - best).abs() > 1e-9 * best.abs().max(1.0) {
                    return Err(format!("(b) dataset {seed}: gain {got} vs exhaustive {best}"));
                }
            }
            (a, b) => return Err(format!("(b) dataset {seed}: tree {a:?} vs exhaustive {b:?}")),
        }
    }
    // (c) training loss never rises with gamma = 0
    for seed in 0..20 {
        let (x, y) = noisy_multiclass(500 + seed, 120);
        let cfg = TrainConfig {
            rounds: 30,
            gamma: 0.0,
            ..TrainConfig::default()
        };
        let forest = train(&x, &y, &cfg).map_err(|e| e.to_string())?;
        for r in 1..=cfg.rounds {
            let (prev, cur) = (forest.loss_after(&x, &y, r - 1), forest.loss_after(&x, &y, r));
            if cur > prev + 1e-12 {
                return Err(format!("(c) dataset {seed} round {r}: {prev} -> {cur}"));
            }
        }
    }
    // (d) hand example
    let x = FeatureMatrix::from_dense(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        max_depth: 1,
        min_child_weight: 0.0,
        lambda: 1.0,
        gamma: 0.0,
        ..TrainConfig::default()
    };
    let g = [-1.0, -1.0, 1.0, 1.0];
    let tree = grow_tree(&g, &[1.0; 4], &x, &cfg).map_err(|e| e.to_string())?;
    let (f, thr) = tree.root_split().ok_or("(d) no split")?;
    let gain = triage::gbt::split_gain((-2.0, 2.0), (0.0, 4.0), 1.0, 0.0);
    let leaves = tree.leaf_weights();
    let ok_d = f == 0
        && thr == 1.5
        && gain == 4.0 / 3.0
        && gain_of(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], &g, &[1.0; 4], f, thr, &cfg) == 4.0 / 3.0
        && leaves == [2.0 / 3.0, -2.0 / 3.0];
    if !ok_d {
        return Err(format!("(d) split ({f}, {thr}) gain {gain} leaves {leaves:?}"));
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        secs < 60.0,
        format!("a: worst rel err {worst:.1e}; b: 200 datasets; c: 20 datasets; d: gain 4/3, leaves +/-2/3; {secs:.1}s"),
    )
}

fn vote_oracle_suite() -> Outcome {
    let all = all_vote_vectors(6);
    let mismatches = all
        .iter()
        .filter(|v| vote(v).ok() != Some(vote_oracle(v)))
        .count();
    check(
        all.len() == 4096 && mismatches == 0,
        format!("{} vectors, {mismatches} disagreements", all.len()),
    )
}

fn end_to_end() -> Outcome {
    let t0 = Instant::now();
    let s = generate(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let c = &s.corpus;
    let labels = c.labels();
    let mut counts = [0usize; 4];
    for l in labels.values() {
        counts[l.index()] += 1;
    }
    let n = labels.len();
    let target = [0.60, 0.25, 0.12, 0.03];
    let props_ok = n == 1188
        && counts
            .iter()
            .zip(target)
            .all(|(&k, p)| (k as f64 / n as f64 - p).abs() <= 0.02);
    let (train_ids, test_ids) = stratified_folds(&labels, 5, 0).map_err(|e| e.to_string())?.split(0);
    let opts = ResourceOptions::default();
    let cfg = TrainConfig::default();
    let run = |specs: &[FeatureSetSpec]| -> Result<_, String> {
        let m = train_ensemble(c, &train_ids, specs, &opts, &cfg).map_err(|e| e.to_string())?;
        let preds = m.predict_posts(c, &test_ids).map_err(|e| e.to_string())?;
        score_predictions(c, &preds).map_err(|e| e.to_string())
    };
    let ens = run(&default_specs())?;
    let bow = run(&[FeatureSetSpec::body_only()])?;
    let secs = t0.elapsed().as_secs_f64();
    let gap = 100.0 * (ens.macro_f1_nongreen - bow.macro_f1_nongreen);
    check(
        props_ok && gap >= 5.0 && ens.flagged_f1 >= 0.85 && secs < 300.0,
        format!(
            "labels {counts:?}; test {}; ensemble macro {:.1} vs bow {:.1} (gap {gap:.1}); flagged F1 {:.3}; {secs:.0}s",
            test_ids.len(),
            100.0 * ens.macro_f1_nongreen,
            100.0 * bow.macro_f1_nongreen,
            ens.flagged_f1
        ),
    )
}

fn lda_recovery() -> Outcome {
    let (docs, _) = planted_corpus(300, 11);
    let cfg = LdaConfig {
        topics: 3,
        train_iters: 500,
        infer_iters: 50,
        min_df: 1,
        seed: 5,
        ..LdaConfig::default()
    };
    let model = lda_train(&docs, &cfg).map_err(|e| e.to_string())?;
    let (_, sims) = best_alignment(&model);
    let (probe, _) = planted_corpus(60, 99);
    let mut calls = 0;
    let mut worst = 0.0f64;
    for (i, doc) in docs.iter().chain(&probe).enumerate() {
        let theta = lda_infer(&model, doc, cfg.infer_iters, i as u64);
        calls += 1;
        if theta.0.iter().any(|&p| p < 0.0) {
            return Err(format!("negative topic weight on call {i}"));
        }
        worst = worst.max((theta.0.iter().sum::<f64>() - 1.0).abs());
    }
    check(
        sims.iter().all(|&s| s >= 0.8) && worst < 1e-9,
        format!("cosines {:.3?}; {calls} inference calls, max |sum - 1| {worst:.1e}", sims),
    )
}

fn trend_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..25);
        let mut xs: Vec<u32> = (0..120).collect();
        for i in 0..n {
            let j = rng.gen_range(i..xs.len());
            xs.swap(i, j);
        }
        let mut xs = xs[..n].to_vec();
        xs.sort_unstable();
        let pts: Vec<MonthlyPoint> = xs
            .into_iter()
            .map(|x| MonthlyPoint {
                x: x as f64,
                y: rng.gen_range(0.0..1.0),
            })
            .collect();
        let t = fit_trend(&pts).map_err(|e| e.to_string())?;
        let (m, b, r) = closed_form_fit(&pts);
        for (a, e) in [(t.m, m), (t.b, b), (t.r, r)] {
            worst = worst.max((a - e).abs() / e.abs().max(1.0));
        }
    }
    let mut declining = 0;
    let mut negative = 0;
    for seed in 0..5 {
        let s = generate(&SynthConfig {
            seed,
            ..SynthConfig::default()
        })
        .map_err(|e| e.to_string())?;
        let users = user_histories(&s.corpus, &s.truth);
        for u in users.iter().filter(|u| s.declining_users.contains(&u.author_id)) {
            declining += 1;
            if u.trend(SeverityScale::FineGrained).is_ok_and(|t| t.m < 0.0) {
                negative += 1;
            }
        }
    }
    let share = negative as f64 / declining.max(1) as f64;
    let flat: Vec<MonthlyPoint> = (0..6).map(|x| MonthlyPoint { x: x as f64, y: 0.33 }).collect();
    let c = fit_trend(&flat).map_err(|e| e.to_string())?;
    check(
        worst <= 1e-9 && declining > 0 && share >= 0.95 && c.m == 0.0 && c.r == 0.0,
        format!(
            "max rel diff {worst:.1e} over 1000 series; {negative}/{declining} planted decliners negative ({:.1}%); constant m={} r={}",
            100.0 * share,
            c.m,
            c.r
        ),
    )
}

fn cli(args: &[&str]) -> Result<(), String> {
    let argv: Vec<&str> = std::iter::once("triage").chain(args.iter().copied()).collect();
    match triage::cli::run(argv) {
        0 => Ok(()),
        code => Err(format!("`triage {}` exited {code}", args.join(" "))),
    }
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = tmp.path().join("in");
    let p = |d: &Path, f: &str| d.join(f).display().to_string();
    std::fs::create_dir_all(&input).map_err(|e| e.to_string())?;
    let small = ["--topics", "5", "--lda-iters", "30", "--infer-iters", "10"];
    let corpus = p(&input, "corpus.jsonl");
    let lex = p(&input, "lex");
    let model = p(&input, "model.json");
    cli(&["synth", "--seed", "3", "--users", "60", "--labeled", "200", "--months", "6", "--out", &corpus, "--lexicon-dir", &lex])?;
    let mut args = vec!["train", "--corpus", &corpus, "--out", &model, "--ensemble", "--rounds", "10", "--seed", "3"];
    args.extend(small);
    cli(&args)?;
    let post = triage::corpus::load_corpus(&corpus).map_err(|e| e.to_string())?.0.labeled().next().unwrap().post_id.clone();

    let run = |dir: &PathBuf| -> Result<Vec<PathBuf>, String> {
        std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        let o = |f: &str| p(dir, f);
        let (model_out, ablate_out) = (o("model.json"), o("ablate.json"));
        cli(&["synth", "--seed", "3", "--users", "60", "--labeled", "200", "--months", "6", "--out", &o("corpus.jsonl"), "--vectors", &o("vectors.tsv"), "--truth", &o("truth.json"), "--lexicon-dir", &o("lex")])?;
        cli(&["lda-train", "--corpus", &corpus, "--out", &o("lda.json"), "--topics", "5", "--lda-iters", "30", "--seed", "3"])?;
        let mut a = vec!["train", "--corpus", &corpus, "--out", &model_out, "--ensemble", "--rounds", "10", "--seed", "3", "--lexicon-dir", &lex];
        a.extend(small);
        cli(&a)?;
        cli(&["predict", "--model", &model, "--corpus", &corpus, "--out", &o("predict.json")])?;
        cli(&["eval", "--model", &model, "--corpus", &corpus, "--split", "test", "--out", &o("eval.json")])?;
        cli(&["eval", "--model", &model, "--corpus", &corpus, "--format", "table", "--out", &o("eval.txt")])?;
        cli(&["cv", "--corpus", &corpus, "--k", "3", "--groups", "body,context", "--rounds", "5", "--baseline", "--seed", "3", "--out", &o("cv.json")])?;
        let mut a = vec!["ablate", "--corpus", &corpus, "--rounds", "5", "--seed", "3", "--out", &ablate_out];
        a.extend(small);
        cli(&a)?;
        cli(&["trends", "--corpus", &corpus, "--model", &model, "--threshold", "0.05", "--csv", &o("trends.csv"), "--out", &o("trends.json")])?;
        cli(&["tables", "--corpus", &corpus, "--labels", "gold", "--out", &o("tables.json")])?;
        cli(&["respstats", "--corpus", &corpus, "--model", &model, "--out", &o("respstats.json")])?;
        cli(&["vote-debug", "--model", &model, "--corpus", &corpus, "--post", &post, "--out", &o("vote.json")])?;
        let mut files = Vec::new();
        collect(dir, &mut files);
        files.sort();
        Ok(files)
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let fa = run(&a)?;
    let fb = run(&b)?;
    let rel = |root: &Path, fs: &[PathBuf]| fs.iter().map(|f| f.strip_prefix(root).unwrap().to_path_buf()).collect::<Vec<_>>();
    if rel(&a, &fa) != rel(&b, &fb) {
        return Err("runs produced different file sets".into());
    }
    let differing: Vec<String> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| std::fs::read(x).ok() != std::fs::read(y).ok())
        .map(|(x, _)| x.strip_prefix(&a).unwrap().display().to_string())
        .collect();
    check(
        differing.is_empty(),
        format!("{} output files from 11 subcommands compared; differing: {differing:?}", fa.len()),
    )
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) {
    for e in std::fs::read_dir(dir).unwrap().flatten() {
        let path = e.path();
        if path.is_dir() {
            collect(&path, out);
        } else {
            out.push(path);
        }
    }
}

fn main() {
    if std::env::var_os("RUST_LOG").is_none() {
        std::env::set_var("RUST_LOG", "warn");
    }
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("chi-square reproduction", chi_square_reproduction),
        ("metric identity", metric_identity),
        ("numeric severity mapping", severity_mapping),
        ("boosted tree correctness", gbt_suite),
        ("vote oracle", vote_oracle_suite),
        ("end-to-end synthetic run", end_to_end),
        ("topic recovery", lda_recovery),
        ("trend suite", trend_suite),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("PASS {} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
