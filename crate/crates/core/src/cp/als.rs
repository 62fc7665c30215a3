use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::objective::CpObjective;
use super::{random_init, relative_residual_from_norm};
use super::trace::{SolveStatus, SolveTrace, TraceRecord};
use crate::error::{Error, Result};
use crate::tensor::{mttkrp, KruskalTensor, Matrix, SparseTensor3};

#[derive(Debug, Clone, PartialEq)]
pub struct AlsConfig {
    pub rank: usize,
    pub max_iters: usize,
    /// Stop when the relative fit `1 − ‖X − K‖/‖X‖` changes by less than this.
    pub fit_tol: f64,
    pub seed: u64,
    /// Added to the diagonal of every Gram system.
    pub ridge: f64,
    /// Scale of the uniform random start, matching the NCG solver.
    pub init_scale: f64,
}

impl AlsConfig {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            max_iters: 200,
            fit_tol: 1e-8,
            seed: 0,
            ridge: 1e-12,
            init_scale: 0.1,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::arg("rank must be at least 1"));
        }
        if !(self.fit_tol > 0.0 && self.ridge > 0.0 && self.init_scale > 0.0) {
            return Err(Error::arg("fit_tol, ridge and init_scale must be positive"));
        }
        Ok(())
    }
}

/// Classical CP-ALS. Each sweep solves the three factor least-squares
/// problems in turn, normalizes the new factor's columns and pushes the
/// column norms into the next factor of the cycle, which leaves the
/// reconstruction unchanged. The trace records the same objective the NCG
/// solver minimizes, once per sweep.
pub fn solve_als(t: &SparseTensor3, cfg: &AlsConfig) -> Result<(KruskalTensor, SolveTrace)> {
    cfg.validate()?;
    if t.nnz() == 0 {
        return Err(Error::arg("tensor has no stored entries"));
    }
    let started = Instant::now();
    let obj = CpObjective::new(t, cfg.rank)?;
    let norm_x = t.norm();
    let mut trace = SolveTrace::new();
    let fit_of = |w: f64| 1.0 - relative_residual_from_norm(w, norm_x);

    let mut model = random_init(t.shape(), cfg.rank, cfg.init_scale, cfg.seed)?;
    let (f0, g0) = obj.value_and_gradient(&model.flatten())?;
    trace.records.push(TraceRecord {
        iter: 0,
        objective: f0,
        grad_norm: g0.norm(),
        alpha: 0.0,
        ls_evals: 0,
    });
    let mut fit = fit_of(f0);

    for sweep in 1..=cfg.max_iters {
        for mode in 1..=3 {
            model = match update_factor(t, model, mode, cfg.ridge) {
                Ok(m) => m,
                Err(e) => return Err(attach(e, &trace, started)),
            };
        }
        let (w, g) = obj
            .value_and_gradient(&model.flatten())
            .map_err(|e| attach(e, &trace, started))?;
        trace.records.push(TraceRecord {
            iter: sweep,
            objective: w,
            grad_norm: g.norm(),
            alpha: 0.0,
            ls_evals: 0,
        });
        let new_fit = fit_of(w);
        let change = (new_fit - fit).abs();
        fit = new_fit;
        if change < cfg.fit_tol {
            trace.status = SolveStatus::ConvergedByObjective;
            break;
        }
    }
    trace.wall_time = started.elapsed();
    Ok((model, trace))
}

fn attach(e: Error, trace: &SolveTrace, started: Instant) -> Error {
    match e {
        Error::Numerical { message, .. } => {
            let mut trace = trace.clone();
            trace.wall_time = started.elapsed();
            Error::Numerical {
                message,
                trace: Some(Box::new(trace)),
            }
        }
        other => other,
    }
}

/// Least-squares update of one factor followed by column balancing.
fn update_factor(
    t: &SparseTensor3,
    model: KruskalTensor,
    mode: usize,
    ridge: f64,
) -> Result<KruskalTensor> {
    let rank = model.rank();
    let rhs = mttkrp(t, &model, mode)?;
    let grams = model.factors().each_ref().map(Matrix::gram);
    let (p, q) = match mode {
        1 => (1, 2),
        2 => (0, 2),
        _ => (0, 1),
    };
    let h = grams[p].hadamard(&grams[q])?;
    let system = DMatrix::from_fn(rank, rank, |r, s| {
        h.get(r, s) + if r == s { ridge } else { 0.0 }
    });
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::numerical(format!("singular Gram matrix in mode {mode}"), None))?;

    let rows = rhs.rows();
    let mut updated = Matrix::zeros(rows, rank);
    for i in 0..rows {
        let sol = chol.solve(&DVector::from_row_slice(rhs.row(i)));
        updated.row_mut(i).copy_from_slice(sol.as_slice());
    }
    if !updated.is_finite() {
        return Err(Error::numerical(
            format!("non-finite factor update in mode {mode}"),
            None,
        ));
    }

    let norms: Vec<f64> = (0..rank)
        .map(|r| updated.column(r).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    for i in 0..rows {
        for (v, &n) in updated.row_mut(i).iter_mut().zip(&norms) {
            if n > 0.0 {
                *v /= n;
            }
        }
    }

    let [mut a, mut b, mut c] = model.into_factors();
    let next = match mode {
        1 => {
            a = updated;
            &mut b
        }
        2 => {
            b = updated;
            &mut c
        }
        _ => {
            c = updated;
            &mut a
        }
    };
    for i in 0..next.rows() {
        for (v, &n) in next.row_mut(i).iter_mut().zip(&norms) {
            if n > 0.0 {
                *v *= n;
            }
        }
    }
    KruskalTensor::new(a, b, c)
}
