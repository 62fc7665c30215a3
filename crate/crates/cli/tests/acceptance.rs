//! Acceptance criteria, one report line each. The oracles here (dense
//! brute-force objective, finite differences, loop metrics) are written
//! independently of the library code they check.
//!
//! Runs without the libtest harness so the report is always printed:
//! `cargo test -p sparsecast-cli --test acceptance`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsecast_core::cp::{gradient, objective, solve, solve_als, AlsConfig, NcgConfig, SolveTrace};
use sparsecast_core::ingest::{synth_generate, SynthConfig};
use sparsecast_core::metrics::{aggregate, evaluate};
use sparsecast_core::tensor::{KruskalTensor, ParamVector, SparseTensor3};
use sparsecast_predict::models::{Cnn1d, Lstm, Mlp, Network};
use sparsecast_predict::{build_dataset, predict_rolling, train, ModelKind, RollMode, TrainConfig};

const GRAD_REL_TOL: f64 = 1e-5;
const RECOVERY_RESIDUAL: f64 = 1e-5;
const RECOVERY_MAX_ITERS: usize = 500;
const TABLE1_RATIO: f64 = 1.05;
const TABLE1_BUDGET: usize = 200;
const OBJECTIVE_TOL: f64 = 1e-9;
const NET_GRAD_REL_TOL: f64 = 1e-4;
const METRIC_TOL: f64 = 1e-12;

/// Result of one criterion.
struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Every CPOPT trace produced by the suite, checked by the last criterion.
#[derive(Default)]
struct Traces(Vec<(String, Vec<f64>)>);

impl Traces {
    fn push(&mut self, label: impl Into<String>, trace: &SolveTrace) {
        self.0
            .push((label.into(), trace.records.iter().map(|r| r.objective).collect()));
    }
}

// ---------------------------------------------------------------- oracles

/// `½‖X − [[A,B,C]]‖²` over every cell of the dense tensor.
fn dense_objective(t: &SparseTensor3, k: &KruskalTensor) -> f64 {
    let [ni, nj, nk] = t.shape();
    let mut x = vec![0.0; ni * nj * nk];
    for e in t.entries() {
        x[e.i + ni * (e.j + nj * e.k)] = e.value;
    }
    let mut sum = 0.0;
    for kk in 0..nk {
        for j in 0..nj {
            for i in 0..ni {
                let mut m = 0.0;
                for r in 0..k.rank() {
                    m += k.a().get(i, r) * k.b().get(j, r) * k.c().get(kk, r);
                }
                let d = x[i + ni * (j + nj * kk)] - m;
                sum += d * d;
            }
        }
    }
    0.5 * sum
}

fn dense_objective_at(t: &SparseTensor3, x: &[f64], rank: usize) -> f64 {
    let k = KruskalTensor::unflatten(&ParamVector(x.to_vec()), t.shape(), rank).unwrap();
    dense_objective(t, &k)
}

fn random_sparse(rng: &mut ChaCha8Rng, shape: [usize; 3], density: f64) -> SparseTensor3 {
    let mut triples = Vec::new();
    for k in 0..shape[2] {
        for j in 0..shape[1] {
            for i in 0..shape[0] {
                if rng.random_bool(density) {
                    triples.push((i, j, k, rng.random_range(-2.0..2.0)));
                }
            }
        }
    }
    SparseTensor3::from_triples(shape, triples).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng) -> (SparseTensor3, usize, Vec<f64>) {
    let shape = [
        rng.random_range(1..=6),
        rng.random_range(1..=5),
        rng.random_range(1..=4),
    ];
    let rank = rng.random_range(1..=3);
    let t = random_sparse(rng, shape, 0.6);
    let n = rank * shape.iter().sum::<usize>();
    let x = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (t, rank, x)
}

/// Central-difference gradient of `loss_sum` over `net`'s parameters, where
/// the loss is `Σ (y − t)²` over `batch`.
fn net_gradcheck<N: Network>(net: &mut N, batch: &[(Vec<f64>, f64)]) -> f64 {
    let loss = |net: &N| -> f64 {
        batch
            .iter()
            .map(|(x, t)| (net.forward(x) - t).powi(2))
            .sum()
    };
    let mut grad = vec![0.0; net.params().len()];
    for (x, t) in batch {
        let t = *t;
        net.forward_backward(x, &mut grad, &mut |y| 2.0 * (y - t));
    }
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (p, &analytic) in grad.iter().enumerate() {
        let orig = net.params()[p];
        net.params_mut()[p] = orig + h;
        let up = loss(net);
        net.params_mut()[p] = orig - h;
        let down = loss(net);
        net.params_mut()[p] = orig;
        let fd = (up - down) / (2.0 * h);
        let scale = analytic.abs().max(fd.abs()).max(1e-6);
        worst = worst.max((analytic - fd).abs() / scale);
    }
    worst
}

// ---------------------------------------------------------------- criteria

fn gradient_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (t, rank, x) = random_instance(&mut rng);
        let g = gradient(&ParamVector(x.clone()), &t, rank).unwrap();
        let h = 1e-5;
        for p in 0..x.len() {
            let mut xp = x.clone();
            xp[p] += h;
            let mut xm = x.clone();
            xm[p] -= h;
            let fd = (dense_objective_at(&t, &xp, rank) - dense_objective_at(&t, &xm, rank)) / (2.0 * h);
            let analytic = g.as_slice()[p];
            // Near-zero components fall back to an absolute 1e-9 error.
            let scale = analytic.abs().max(fd.abs()).max(1e-4);
            worst = worst.max((analytic - fd).abs() / scale);
        }
    }
    verdict(
        worst < GRAD_REL_TOL,
        format!("20 instances, worst componentwise relative error {worst:.2e} (< {GRAD_REL_TOL:e})"),
    )
}

fn exact_recovery(traces: &mut Traces) -> Verdict {
    let mut ok = 0;
    let mut residuals = Vec::new();
    for seed in 0..10 {
        let cfg = SynthConfig {
            shape: [10, 8, 6],
            true_rank: 2,
            noise_sigma: 0.0,
            sparsity: 0.0,
            seed,
            ..SynthConfig::default()
        };
        let (x, _) = synth_generate(&cfg).unwrap();
        let ncg = NcgConfig::new(2).with_seed(seed).with_max_iters(RECOVERY_MAX_ITERS);
        let (k, trace) = solve(&x, &ncg).unwrap();
        traces.push(format!("recovery seed {seed}"), &trace);
        let residual = (2.0 * dense_objective(&x, &k)).sqrt() / x.norm();
        if residual < RECOVERY_RESIDUAL && trace.iterations() <= RECOVERY_MAX_ITERS {
            ok += 1;
        }
        residuals.push(format!("{residual:.1e}"));
    }
    verdict(
        ok >= 8,
        format!("{ok}/10 seeds below {RECOVERY_RESIDUAL:e} (need 8): [{}]", residuals.join(" ")),
    )
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn table1_direction(traces: &mut Traces) -> Verdict {
    let (mut cp, mut als) = (Vec::new(), Vec::new());
    for seed in 0..10 {
        let cfg = SynthConfig {
            shape: [200, 22, 16],
            true_rank: 25,
            noise_sigma: 0.1,
            sparsity: 0.8,
            seed,
            ..SynthConfig::default()
        };
        let (x, _) = synth_generate(&cfg).unwrap();
        let (_, t_cp) = solve(&x, &NcgConfig::new(25).with_seed(seed).with_max_iters(TABLE1_BUDGET)).unwrap();
        let (_, t_als) =
            solve_als(&x, &AlsConfig::new(25).with_seed(seed).with_max_iters(TABLE1_BUDGET)).unwrap();
        traces.push(format!("table1 seed {seed}"), &t_cp);
        cp.push(t_cp.final_objective().unwrap());
        als.push(t_als.final_objective().unwrap());
    }
    let (m_cp, m_als) = (median(&mut cp), median(&mut als));
    verdict(
        m_cp <= TABLE1_RATIO * m_als,
        format!(
            "median W_c cpopt {m_cp:.3} vs als {m_als:.3}, ratio {:.4} (<= {TABLE1_RATIO})",
            m_cp / m_als
        ),
    )
}

fn objective_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (t, rank, x) = random_instance(&mut rng);
        let lib = objective(&ParamVector(x.clone()), &t, rank).unwrap();
        worst = worst.max((lib - dense_objective_at(&t, &x, rank)).abs());
    }
    verdict(
        worst < OBJECTIVE_TOL,
        format!("50 instances, worst absolute difference {worst:.2e} (< {OBJECTIVE_TOL:e})"),
    )
}

fn predictor_gradients() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let batch = |n_in: usize, rng: &mut ChaCha8Rng| -> Vec<(Vec<f64>, f64)> {
        (0..3)
            .map(|_| {
                (
                    (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect()
    };
    let mut mlp = Mlp::new(5, [4, 3], &mut rng);
    let mut cnn = Cnn1d::new(2, 4, 3, 3, 5, &mut rng);
    let mut lstm = Lstm::new(2, 2, 3, &mut rng);
    // Nudge biases off zero so no rectified unit sits on its kink.
    for net in [&mut mlp as &mut dyn Network, &mut cnn] {
        let blocks = net.layout().blocks.clone();
        for b in blocks.iter().filter(|b| b.dims.len() == 1) {
            net.params_mut()[b.range()].iter_mut().for_each(|v| *v = 0.25);
        }
    }
    let b_mlp = batch(5, &mut rng);
    let b_cnn = batch(6, &mut rng);
    let b_lstm = batch(4, &mut rng);
    let errs = [
        ("mlp", net_gradcheck(&mut mlp, &b_mlp)),
        ("cnn", net_gradcheck(&mut cnn, &b_cnn)),
        ("lstm", net_gradcheck(&mut lstm, &b_lstm)),
    ];
    let pass = errs.iter().all(|(_, e)| *e < NET_GRAD_REL_TOL);
    let detail: Vec<String> = errs.iter().map(|(n, e)| format!("{n} {e:.2e}")).collect();
    verdict(pass, format!("max relative error {} (< {NET_GRAD_REL_TOL:e})", detail.join(", ")))
}

/// Aggregate MAE of a closed-loop 3-step forecast from slice 12 against the
/// latent series of the fitted factors.
fn rolling_mae(kind: ModelKind, k: &KruskalTensor, seed: u64) -> f64 {
    let ds = build_dataset(k, 3, 0..12).unwrap();
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let model = train(kind, &ds, &cfg).unwrap();
    let [ni, nj, _] = k.shape();
    let mut reports = Vec::new();
    for i in 0..ni {
        for j in 0..nj {
            let f = predict_rolling(&model, k, (i, j), 3, 3, 12, RollMode::ClosedLoop).unwrap();
            let actual: Vec<f64> = (12..15).map(|t| k.value_at(i, j, t)).collect();
            reports.push(evaluate(&f, &actual).unwrap());
        }
    }
    aggregate(&reports).unwrap().mae
}

fn tables23_direction(traces: &mut Traces) -> Verdict {
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 0..10 {
        let cfg = SynthConfig {
            shape: [20, 5, 16],
            true_rank: 3,
            noise_sigma: 0.1,
            sparsity: 0.5,
            seed,
            period: 4.0,
        };
        let (x, _) = synth_generate(&cfg).unwrap();
        let (k, trace) = solve(&x, &NcgConfig::new(3).with_seed(seed).with_max_iters(500)).unwrap();
        traces.push(format!("seasonal seed {seed}"), &trace);
        let lstm = rolling_mae(ModelKind::Lstm, &k, seed);
        let cnn = rolling_mae(ModelKind::Cnn, &k, seed);
        if lstm < cnn {
            wins += 1;
        }
        rows.push(format!("{lstm:.4}/{cnn:.4}"));
    }
    verdict(
        wins >= 8,
        format!("LSTM MAE < CNN MAE in {wins}/10 seeds (need 8), lstm/cnn: [{}]", rows.join(" ")),
    )
}

fn metric_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst: f64 = 0.0;
    let mut rmse_ge_mae = true;
    for case in 0..1000 {
        let n = rng.random_range(1..40);
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..3.0)).collect();
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..3.0)).collect();
        let r = evaluate(&p, &a).unwrap();
        rmse_ge_mae &= r.rmse >= r.mae;
        if case < 200 {
            let mut abs = 0.0;
            let mut sq = 0.0;
            let mut dot = 0.0;
            let mut np = 0.0;
            let mut na = 0.0;
            let mut lo = 0.0;
            let mut hi = 0.0;
            for i in 0..n {
                abs += (p[i] - a[i]).abs();
                sq += (p[i] - a[i]) * (p[i] - a[i]);
                dot += p[i] * a[i];
                np += p[i] * p[i];
                na += a[i] * a[i];
                let (x, y) = (f64::max(p[i], 0.0), f64::max(a[i], 0.0));
                lo += f64::min(x, y);
                hi += f64::max(x, y);
            }
            let oracle = [
                abs / n as f64,
                (sq / n as f64).sqrt(),
                dot / (np.sqrt() * na.sqrt()),
                if hi > 0.0 { 1.0 - lo / hi } else { 0.0 },
            ];
            let got = [r.mae, r.rmse, r.cosine_sim, r.jaccard_dist];
            for (g, o) in got.iter().zip(oracle) {
                worst = worst.max((g - o).abs());
            }
        }
    }
    verdict(
        worst < METRIC_TOL && rmse_ge_mae,
        format!("worst deviation from loop oracle {worst:.2e} (< {METRIC_TOL:e}); RMSE >= MAE on 1000 cases: {rmse_ge_mae}"),
    )
}

fn sparsecast(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sparsecast"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "`sparsecast {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn pipeline(dir: &Path) -> Result<(), String> {
    sparsecast(dir, &["synth", "--shape", "12,4,16", "--rank", "2", "--seed", "7", "--out", "synth"])?;
    sparsecast(
        dir,
        &["decompose", "--input", "synth/tensor.coo", "--rank", "2", "--seed", "7", "--out", "fit"],
    )?;
    sparsecast(
        dir,
        &["predict", "--factors", "fit/factors_cpopt.kruskal", "--model", "lstm", "--seed", "7", "--out", "pred"],
    )?;
    sparsecast(
        dir,
        &["evaluate", "--predictions", "pred/predictions_lstm.csv", "--truth", "synth/truth.kruskal", "--out", "eval"],
    )
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(root, &path, out);
        } else {
            out.insert(path.strip_prefix(root).unwrap().to_owned(), std::fs::read(&path).unwrap());
        }
    }
}

fn trace_objectives(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

fn pipeline_determinism(traces: &mut Traces) -> Verdict {
    let runs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut files = Vec::new();
    for run in &runs {
        if let Err(e) = pipeline(run.path()) {
            return verdict(false, e);
        }
        let mut f = BTreeMap::new();
        collect_files(run.path(), run.path(), &mut f);
        files.push(f);
    }
    traces
        .0
        .push(("pipeline".into(), trace_objectives(&runs[0].path().join("fit/trace_cpopt.csv"))));
    let differing: Vec<String> = files[0]
        .iter()
        .filter(|(name, bytes)| files[1].get(*name) != Some(bytes))
        .map(|(name, _)| name.display().to_string())
        .collect();
    let same_set = files[0].keys().eq(files[1].keys());
    verdict(
        same_set && differing.is_empty() && files[0].len() >= 10,
        format!(
            "{} files compared, {} differ{}",
            files[0].len(),
            differing.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!(": {}", differing.join(", "))
            }
        ),
    )
}

fn monotone_traces(traces: &Traces) -> Verdict {
    let bad: Vec<&str> = traces
        .0
        .iter()
        .filter(|(_, w)| w.windows(2).any(|p| p[1] > p[0]))
        .map(|(l, _)| l.as_str())
        .collect();
    let steps: usize = traces.0.iter().map(|(_, w)| w.len()).sum();
    verdict(
        bad.is_empty() && !traces.0.is_empty(),
        format!(
            "{} CPOPT runs, {steps} iterations, non-monotone runs: {}",
            traces.0.len(),
            if bad.is_empty() { "none".to_owned() } else { bad.join(", ") }
        ),
    )
}

fn main() {
    let mut traces = Traces::default();
    type Criterion<'a> = (&'a str, Duration, Box<dyn FnOnce(&mut Traces) -> Verdict + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("gradient correctness", Duration::from_secs(10), Box::new(|_| gradient_correctness())),
        ("exact recovery", Duration::from_secs(30), Box::new(exact_recovery)),
        ("cpopt vs als objective", Duration::from_secs(600), Box::new(table1_direction)),
        ("objective identity", Duration::from_secs(60), Box::new(|_| objective_identity())),
        ("predictor gradients", Duration::from_secs(60), Box::new(|_| predictor_gradients())),
        ("lstm vs cnn forecast", Duration::from_secs(300), Box::new(tables23_direction)),
        ("metric oracles", Duration::from_secs(60), Box::new(|_| metric_oracles())),
        ("pipeline determinism", Duration::from_secs(300), Box::new(pipeline_determinism)),
    ];
    let mut failed = Vec::new();
    let mut report = |n: usize, name: &str, v: Verdict, took: Duration, limit: Duration| {
        let in_time = took <= limit;
        let pass = v.pass && in_time;
        println!(
            "criterion {n} [{}] {name}: {} ({:.1}s, limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
        if !pass {
            failed.push(n);
        }
    };
    for (n, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let v = run(&mut traces);
        report(n + 1, name, v, start.elapsed(), limit);
    }
    let start = Instant::now();
    let v = monotone_traces(&traces);
    report(9, "monotone cpopt traces", v, start.elapsed(), Duration::from_secs(10));
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
