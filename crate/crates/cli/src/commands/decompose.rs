use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Duration;

use serde::Serialize;
use sparsecast_core::cp::{relative_residual, solve, solve_als, AlsConfig, NcgConfig, SolveStatus, SolveTrace};
use sparsecast_core::tensor::io::{load_coo, save_kruskal};
use sparsecast_core::tensor::SparseTensor3;
use sparsecast_core::{Error, Result};

use crate::args::{DecomposeArgs, SolverChoice};
use crate::manifest::{prepare_out, Manifest};

#[derive(Debug, Serialize)]
struct Outcome {
    solver: &'static str,
    status: String,
    iterations: usize,
    final_objective: Option<f64>,
    relative_residual: Option<f64>,
}

fn run_one(
    name: &'static str,
    t: &SparseTensor3,
    a: &DecomposeArgs,
) -> Result<(sparsecast_core::tensor::KruskalTensor, SolveTrace)> {
    if name == "cpopt" {
        let mut cfg = NcgConfig::new(a.rank).with_seed(a.seed);
        if let Some(n) = a.max_iters {
            cfg = cfg.with_max_iters(n);
        }
        solve(t, &cfg)
    } else {
        let mut cfg = AlsConfig::new(a.rank).with_seed(a.seed);
        if let Some(n) = a.max_iters {
            cfg = cfg.with_max_iters(n);
        }
        solve_als(t, &cfg)
    }
}

fn write_trace(trace: &SolveTrace, path: &std::path::Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    trace.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn run(a: &DecomposeArgs) -> Result<()> {
    let t = load_coo(&a.input).map_err(super::with_path(&a.input))?;
    let solvers: &[&'static str] = match a.solver {
        SolverChoice::Cpopt => &["cpopt"],
        SolverChoice::Als => &["als"],
        SolverChoice::Both => &["cpopt", "als"],
    };
    prepare_out(&a.out)?;
    let mut m = Manifest::new("decompose", a);
    let mut outcomes = Vec::new();
    let mut failure = None;
    for &name in solvers {
        match run_one(name, &t, a) {
            Ok((k, trace)) => {
                save_kruskal(&k, m.output(&a.out, format!("factors_{name}.kruskal")))?;
                write_trace(&trace, &m.output(&a.out, format!("trace_{name}.csv")))?;
                let w = trace.final_objective();
                eprintln!("{name}: wall time {:.3}s", trace.wall_time.as_secs_f64());
                outcomes.push(Outcome {
                    solver: name,
                    status: trace.status.as_str().to_owned(),
                    iterations: trace.iterations(),
                    final_objective: w,
                    relative_residual: w.map(|w| relative_residual(w, &t)),
                });
            }
            Err(Error::Numerical { message, trace }) => {
                let partial = trace.as_deref().cloned().unwrap_or_else(|| SolveTrace {
                    records: Vec::new(),
                    status: SolveStatus::MaxIters,
                    wall_time: Duration::ZERO,
                });
                write_trace(&partial, &m.output(&a.out, format!("trace_{name}.csv")))?;
                let iterations = partial.iterations();
                eprintln!("{name} failed: {message}");
                outcomes.push(Outcome {
                    solver: name,
                    status: "failed".into(),
                    iterations,
                    final_objective: None,
                    relative_residual: None,
                });
                failure.get_or_insert(Error::Numerical {
                    message: format!("{name}: {message}"),
                    trace,
                });
            }
            Err(e) => return Err(e),
        }
    }

    let mut w = csv_writer(&m.output(&a.out, "summary.csv"))?;
    writeln!(w, "solver,status,iterations,final_objective,relative_residual")?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for o in &outcomes {
        writeln!(
            w,
            "{},{},{},{},{}",
            o.solver,
            o.status,
            o.iterations,
            opt(o.final_objective),
            opt(o.relative_residual)
        )?;
        println!(
            "{}: W_c={} relative_residual={} iterations={} status={}",
            o.solver,
            opt(o.final_objective),
            opt(o.relative_residual),
            o.iterations,
            o.status
        );
    }
    w.flush()?;
    m.details = serde_json::json!({ "results": outcomes });
    m.write(&a.out)?;
    failure.map_or(Ok(()), Err)
}

fn csv_writer(path: &std::path::Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}
