//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion outside `KNOWN_RED` fails. Criteria listed in
//! `KNOWN_RED` still print FAIL; set `EVONET_STRICT_ACCEPTANCE=1` to make
//! them fail the run as well.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{auc_pairs, betweenness_fw, closeness_fw, kmeans2_exhaustive, pagerank_solve, same_partition, to_mat};
use evonet::experiment::{run_ablation, AblationConfig, AblationRun};
use evonet::graph::{build_graph_sequence, centrality, pagerank, DEFAULT_EPSILON};
use evonet::io::RunConfig;
use evonet::model::MessageKind;
use evonet::recognition::{fit_kmeans, recognition_weights, KMeansConfig, RecognitionFrame, RecognizerKind, RecognizerMeta, StateModel};
use evonet::train::{auc, evonet_grad_check, group_errors, lr_at, TrainConfig};
use evonet::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Synthetic ablation gap and attention localisation; see the README.
const KNOWN_RED: &[usize] = &[5, 6];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

fn kmeans_model(patterns: Vec<Tensor>) -> StateModel {
    StateModel::new(RecognizerKind::Kmeans, patterns, RecognizerMeta::Kmeans { iterations: 0, wcss: 0.0 }).unwrap()
}

fn sq_dist(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn normalisation(budget: Duration) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst, mut degenerate, mut failures) = (0.0f64, 0usize, 0usize);
    for trial in 0..1000 {
        let (k, tau, d) = (rng.random_range(2..9), rng.random_range(1..7), rng.random_range(1..4));
        let base = random_tensor(&mut rng, tau, d);
        // Every tenth model repeats one pattern, so all distances tie.
        let patterns: Vec<Tensor> =
            (0..k).map(|_| if trial % 10 == 0 { base.clone() } else { random_tensor(&mut rng, tau, d) }).collect();
        let segments: Vec<Tensor> = (0..rng.random_range(1..10)).map(|_| random_tensor(&mut rng, tau, d)).collect();
        let frame = recognition_weights(&segments, &kmeans_model(patterns.clone())).unwrap();
        for (t, seg) in segments.iter().enumerate() {
            let row = frame.row(t);
            let dist: Vec<f64> = patterns.iter().map(|p| sq_dist(seg, p)).collect();
            let (lo, hi) = dist.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            let ok = if lo == hi {
                degenerate += 1;
                row.iter().all(|&w| w == 1.0 / k as f64)
            } else {
                let max = row.iter().copied().fold(f64::MIN, f64::max);
                let min = row.iter().copied().fold(f64::MAX, f64::min);
                for (w, x) in row.iter().zip(&dist) {
                    worst = worst.max((w - (hi - x) / (hi - lo)).abs());
                }
                max == 1.0 && min == 0.0 && row.iter().all(|w| (0.0..=1.0).contains(w))
            };
            failures += usize::from(!ok);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && worst < 1e-12 && degenerate > 0 && elapsed < budget,
        format!("{failures} bad rows, {degenerate} degenerate rows, max deviation from min-max oracle {worst:.1e}, {elapsed:.2?}"),
    )
}

fn structure(budget: Duration) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut cross, mut mass) = (0.0f64, 0.0f64);
    let mut count_ok = true;
    for _ in 0..1000 {
        let (t, n) = (rng.random_range(2..12), rng.random_range(1..7));
        let w = Tensor::new(t, n, (0..t * n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let g = build_graph_sequence(&RecognitionFrame { weights: w.clone() }).unwrap();
        count_ok &= g.snapshots.len() == t - 1;
        for (i, m) in g.snapshots.iter().enumerate() {
            let mm = to_mat(m);
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            cross = cross.max((mm[a][b] * mm[c][d] - mm[a][d] * mm[c][b]).abs());
                        }
                    }
                }
            }
            let want = w.row_slice(i).iter().sum::<f64>() * w.row_slice(i + 1).iter().sum::<f64>();
            mass = mass.max((m.data().iter().sum::<f64>() - want).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        count_ok && cross < 1e-9 && mass < 1e-9 && elapsed < budget,
        format!("max cross-ratio residual {cross:.1e}, max mass error {mass:.1e}, {elapsed:.2?}"),
    )
}

fn gradients(budget: Duration) -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [MessageKind::Pool, MessageKind::Ggnn, MessageKind::Gat] {
        let report = evonet_grad_check(0, kind).unwrap();
        let groups = group_errors(&report);
        let worst = groups.iter().map(|(_, e)| *e).fold(0.0, f64::max);
        pass &= groups.iter().all(|(_, e)| *e < 1e-4);
        parts.push(format!("{kind} {worst:.1e} over {} groups", groups.len()));
    }
    let elapsed = start.elapsed();
    outcome(pass && elapsed < budget, format!("max relative error: {}, {elapsed:.2?}", parts.join(", ")))
}

fn oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut kmeans_ok = 0;
    for trial in 0..10 {
        let points: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let segments: Vec<Tensor> = points.iter().map(|p| Tensor::new(1, 2, p.clone()).unwrap()).collect();
        let fit = fit_kmeans(&segments, KMeansConfig::new(2, trial)).unwrap();
        kmeans_ok += usize::from(same_partition(&fit.assignment, &kmeans2_exhaustive(&points).0));
    }

    let mut pr_err = 0.0f64;
    let (mut btw_err, mut close_exact) = (0.0f64, true);
    let choices = [0.0, 0.25, 0.5, 1.0];
    for trial in 0..200 {
        let m = if trial % 2 == 0 {
            Tensor::new(5, 5, (0..25).map(|_| choices[rng.random_range(0..4)]).collect()).unwrap()
        } else {
            Tensor::new(5, 5, (0..25).map(|_| if rng.random_bool(0.5) { rng.random_range(0.0..1.0) } else { 0.0 }).collect())
                .unwrap()
        };
        let mat = to_mat(&m);
        let got = pagerank(&m, 0.85, 1e-14).unwrap();
        for (a, b) in got.iter().zip(pagerank_solve(&mat, 0.85)) {
            pr_err = pr_err.max((a - b).abs());
        }
        let c = centrality(&m, DEFAULT_EPSILON).unwrap();
        for (a, b) in c.betweenness.iter().zip(betweenness_fw(&mat, DEFAULT_EPSILON)) {
            btw_err = btw_err.max((a - b).abs() / b.abs().max(1.0));
        }
        close_exact &= trial % 2 == 1 || c.closeness == closeness_fw(&mat, DEFAULT_EPSILON);
    }

    let mut auc_exact = true;
    for _ in 0..20 {
        let scores: Vec<f64> = (0..200).map(|_| f64::from(rng.random_range(0..25u8)) / 25.0).collect();
        let labels: Vec<u8> = (0..200).map(|_| u8::from(rng.random_bool(0.3))).collect();
        auc_exact &= auc(&scores, &labels) == Some(auc_pairs(&scores, &labels));
    }
    // Betweenness sums the same path fractions in a different order, so it
    // agrees to rounding rather than bit for bit.
    outcome(
        kmeans_ok == 10 && pr_err < 1e-8 && btw_err < 1e-12 && close_exact && auc_exact,
        format!(
            "k-means {kmeans_ok}/10, pagerank L-inf {pr_err:.1e}, betweenness rel {btw_err:.1e}, closeness exact {close_exact}, auc exact {auc_exact}"
        ),
    )
}

fn ablation_config() -> AblationConfig {
    let mut run = RunConfig::default();
    run.train.iterations = 40;
    run.train.learning_rate = 0.01;
    run.train.batch_size = 8;
    run.train.lr_decay_every = 40;
    AblationConfig { run, train_series: 500, test_series: 200 }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn ablation(runs: &[AblationRun], elapsed: Duration, budget: Duration) -> Outcome {
    let full: Vec<f64> = runs.iter().map(|r| auc_pairs(&r.evonet_scores, &r.labels)).collect();
    let wog: Vec<f64> = runs.iter().map(|r| auc_pairs(&r.wog_scores, &r.labels)).collect();
    let (a, b) = (mean(&full), mean(&wog));
    let per_seed: Vec<String> = runs.iter().zip(full.iter().zip(&wog)).map(|(r, (x, y))| format!("seed {} {x:.3}/{y:.3}", r.seed)).collect();
    outcome(
        a >= 0.90 && a - b >= 0.05 && elapsed < budget,
        format!("mean auc {a:.4} vs w/o G {b:.4}, gap {:.4} ({}), {elapsed:.1?}", a - b, per_seed.join(", ")),
    )
}

fn attention(runs: &[AblationRun]) -> Outcome {
    let (mut trig, mut other) = (Vec::new(), Vec::new());
    for r in runs {
        for (alphas, flags) in r.alphas.iter().zip(&r.trigger_steps) {
            for (&a, &f) in alphas.iter().zip(flags) {
                if f { trig.push(a) } else { other.push(a) }
            }
        }
    }
    let (t, o) = (mean(&trig), mean(&other));
    outcome(t > o, format!("mean alpha {t:.4} on {} trigger steps vs {o:.4} on {} others", trig.len(), other.len()))
}

fn scaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let frame = |rng: &mut ChaCha8Rng, n: usize| RecognitionFrame {
        weights: Tensor::new(200, n, (0..200 * n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap(),
    };
    let (small, large) = (frame(&mut rng, 32), frame(&mut rng, 64));
    let time = |f: &RecognitionFrame| {
        let start = Instant::now();
        for _ in 0..50 {
            std::hint::black_box(build_graph_sequence(std::hint::black_box(f)).unwrap());
        }
        start.elapsed().as_secs_f64()
    };
    time(&small);
    time(&large);
    // Each run times both sizes back to back so that load drift cancels.
    let mut runs: Vec<(f64, f64, f64)> = (0..5)
        .map(|_| {
            let (ts, tl) = (time(&small), time(&large));
            (tl / ts, ts, tl)
        })
        .collect();
    runs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (ratio, ts, tl) = runs[2];
    outcome((3.0..=6.0).contains(&ratio), format!("median run {:.2} ms at |V|=64 vs {:.2} ms at |V|=32, ratio {ratio:.2}", tl * 1e3, ts * 1e3))
}

fn end_to_end(dir: &Path) -> Vec<u8> {
    std::fs::write(
        dir.join("run.toml"),
        "seed = 3\nu_size = 8\nhg_size = 8\n[train]\niterations = 3\nbatch_size = 8\n[synth]\nnum_series = 60\nsegments_per_series = 8\n",
    )
    .unwrap();
    for args in [
        &["synth", "--config", "run.toml", "--output", "data.csv"][..],
        &["train", "--config", "run.toml", "--input", "data.csv", "--output", "model.json"],
        &["evaluate", "--config", "run.toml", "--input", "data.csv", "--model", "model.json", "--output", "metrics.json"],
    ] {
        let out = Command::new(env!("CARGO_BIN_EXE_evonet")).current_dir(dir).args(args).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    std::fs::read(dir.join("metrics.json")).unwrap()
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (x, y) = (end_to_end(a.path()), end_to_end(b.path()));
    outcome(x == y && !x.is_empty(), format!("{} vs {} bytes, identical {}", x.len(), y.len(), x == y))
}

fn schedule() -> Outcome {
    let c = TrainConfig::default();
    let got = [lr_at(0, &c), lr_at(20, &c), lr_at(40, &c)];
    outcome(got == [0.001, 0.0001, 0.00001], format!("{got:?}"))
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "recognition normalisation", normalisation(Duration::from_secs(5))),
        (2, "snapshot structure", structure(Duration::from_secs(5))),
        (3, "gradient fidelity", gradients(Duration::from_secs(60))),
        (4, "oracle equivalence", oracles()),
    ];

    let config = ablation_config();
    let start = Instant::now();
    let runs: Vec<AblationRun> = [0, 1, 2].iter().map(|&s| run_ablation(&config, s).unwrap()).collect();
    let elapsed = start.elapsed();
    results.push((5, "synthetic ablation", ablation(&runs, elapsed, Duration::from_secs(15 * 60))));
    results.push((6, "attention localisation", attention(&runs)));
    results.push((7, "complexity scaling", scaling()));
    results.push((8, "determinism", determinism()));
    results.push((9, "lr schedule", schedule()));

    let strict = std::env::var("EVONET_STRICT_ACCEPTANCE").is_ok_and(|v| v == "1");
    let mut blocking = 0;
    for (id, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && KNOWN_RED.contains(id) { " [known red]" } else { "" };
        println!("criterion {id} {tag} {name}: {}{note}", o.detail);
        blocking += usize::from(!o.pass && (strict || !KNOWN_RED.contains(id)));
    }
    let passed = results.iter().filter(|(_, _, o)| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if blocking > 0 {
        std::process::exit(1);
    }
}
