use std::time::Instant;

use super::line_search::{strong_wolfe, WolfeParams};
use super::objective::CpObjective;
use super::trace::{SolveStatus, SolveTrace, TraceRecord};
use super::random_init;
use crate::error::{Error, Result};
use crate::tensor::{dot, KruskalTensor, ParamVector, SparseTensor3};

/// Settings for the nonlinear conjugate gradient CP solver.
#[derive(Debug, Clone, PartialEq)]
pub struct NcgConfig {
    pub rank: usize,
    pub max_iters: usize,
    /// Stop once `‖∇W‖ ≤ grad_tol · ‖∇W(x₀)‖`.
    pub grad_tol: f64,
    /// Stop once the relative objective decrease of an accepted step falls
    /// below this.
    pub f_tol: f64,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub max_line_search_steps: usize,
    pub seed: u64,
    /// Initial factors are uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    /// Restart with steepest descent when `|∇Wₙ·∇Wₙ₋₁| ≥ restart_threshold·‖∇Wₙ‖²`.
    pub restart_threshold: f64,
}

impl NcgConfig {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            max_iters: 1000,
            grad_tol: 1e-8,
            f_tol: 1e-12,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.1,
            max_line_search_steps: 50,
            seed: 0,
            init_scale: 0.1,
            restart_threshold: 0.1,
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
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return Err(Error::arg("need 0 < wolfe_c1 < wolfe_c2 < 1"));
        }
        let positive = [self.grad_tol, self.f_tol, self.init_scale, self.restart_threshold];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::arg("tolerances, init_scale and restart_threshold must be positive"));
        }
        if self.max_line_search_steps == 0 {
            return Err(Error::arg("max_line_search_steps must be at least 1"));
        }
        Ok(())
    }

    fn wolfe(&self) -> WolfeParams {
        WolfeParams {
            c1: self.wolfe_c1,
            c2: self.wolfe_c2,
            max_evals: self.max_line_search_steps,
            ..WolfeParams::default()
        }
    }
}

/// `|β denominator|` below this triggers a steepest-descent restart.
const BETA_DENOM_FLOOR: f64 = 1e-14;

/// Fits a rank-`cfg.rank` CP model to `t` by nonlinear conjugate gradient.
///
/// The first step is steepest descent; later directions are
/// `sₙ = −∇Wₙ + βₙ sₙ₋₁` with the Hestenes-Stiefel
/// `βₙ = ∇Wₙᵀ(∇Wₙ − ∇Wₙ₋₁) / sₙ₋₁ᵀ(∇Wₙ − ∇Wₙ₋₁)`, and every step length
/// comes from a strong Wolfe line search. Only steps that lower the
/// objective are accepted, so the trace is non-increasing.
pub fn solve(t: &SparseTensor3, cfg: &NcgConfig) -> Result<(KruskalTensor, SolveTrace)> {
    cfg.validate()?;
    if t.nnz() == 0 {
        return Err(Error::arg("tensor has no stored entries"));
    }
    let started = Instant::now();
    let obj = CpObjective::new(t, cfg.rank)?;
    let wolfe = cfg.wolfe();
    let mut trace = SolveTrace::new();
    let fail = |e: Error, trace: &SolveTrace| match e {
        Error::Numerical { message, .. } => Error::Numerical {
            message,
            trace: Some(Box::new(trace.clone())),
        },
        other => other,
    };

    let mut x = random_init(t.shape(), cfg.rank, cfg.init_scale, cfg.seed)?.flatten();
    let (mut f, mut g) = obj.value_and_gradient(&x).map_err(|e| fail(e, &trace))?;
    let g0_norm = g.norm();
    trace.records.push(TraceRecord {
        iter: 0,
        objective: f,
        grad_norm: g0_norm,
        alpha: 0.0,
        ls_evals: 0,
    });
    if g0_norm == 0.0 {
        trace.status = SolveStatus::ConvergedByGradient;
        trace.wall_time = started.elapsed();
        return Ok((obj.model(&x)?, trace));
    }

    let mut dir = negate(&g);
    let mut restart = true;
    let mut prev_alpha = 1.0;
    let mut prev_slope = 0.0;
    trace.status = SolveStatus::MaxIters;

    for iter in 1..=cfg.max_iters {
        let mut slope = dot(&g.0, &dir.0);
        if slope.is_nan() || slope >= 0.0 {
            dir = negate(&g);
            slope = -dot(&g.0, &g.0);
            restart = true;
        }

        let mut evals = 0;
        let (step, cached) = loop {
            let alpha0 = if restart {
                1.0
            } else {
                let a = prev_alpha * prev_slope / slope;
                if a.is_finite() && a > 0.0 { a } else { 1.0 }
            };
            let mut last: Option<(f64, f64, ParamVector)> = None;
            let phi = |alpha: f64| {
                let xa = x.axpy(alpha, &dir);
                match obj.value_and_gradient(&xa) {
                    Ok((fa, ga)) => {
                        let s = dot(&ga.0, &dir.0);
                        last = Some((alpha, fa, ga));
                        (fa, s)
                    }
                    Err(_) => (f64::NAN, f64::NAN),
                }
            };
            let step = strong_wolfe(phi, f, slope, alpha0, &wolfe)
                .expect("direction is checked to be a descent direction");
            evals += step.evals;
            if step.value < f {
                break (Some(step), last);
            }
            if restart {
                break (None, None);
            }
            // The conjugate direction made no progress; retry along −∇W.
            dir = negate(&g);
            slope = -dot(&g.0, &g.0);
            restart = true;
        };

        let Some(step) = step else {
            // Not even steepest descent lowers the objective: no further
            // decrease is resolvable in floating point.
            trace.status = SolveStatus::ConvergedByObjective;
            break;
        };
        let x_new = x.axpy(step.alpha, &dir);
        let g_new = match cached {
            Some((a, _, ga)) if a == step.alpha => ga,
            _ => obj.gradient(&x_new).map_err(|e| fail(e, &trace))?,
        };
        let f_new = step.value;
        let g_new_norm = g_new.norm();
        trace.records.push(TraceRecord {
            iter,
            objective: f_new,
            grad_norm: g_new_norm,
            alpha: step.alpha,
            ls_evals: evals,
        });

        let decrease = (f - f_new) / f.abs().max(f64::MIN_POSITIVE);
        if g_new_norm <= cfg.grad_tol * g0_norm {
            trace.status = SolveStatus::ConvergedByGradient;
        } else if f_new == 0.0 || decrease < cfg.f_tol {
            trace.status = SolveStatus::ConvergedByObjective;
        }

        let y: Vec<f64> = g_new.0.iter().zip(&g.0).map(|(a, b)| a - b).collect();
        let denom = dot(&dir.0, &y);
        let numer = dot(&g_new.0, &y);
        let orthogonality_lost =
            dot(&g_new.0, &g.0).abs() >= cfg.restart_threshold * g_new_norm * g_new_norm;
        if denom.abs() < BETA_DENOM_FLOOR || orthogonality_lost {
            dir = negate(&g_new);
            restart = true;
        } else {
            let beta = numer / denom;
            dir = ParamVector(
                g_new
                    .0
                    .iter()
                    .zip(&dir.0)
                    .map(|(gn, d)| -gn + beta * d)
                    .collect(),
            );
            restart = false;
        }
        prev_alpha = step.alpha;
        prev_slope = slope;
        x = x_new;
        f = f_new;
        g = g_new;

        if trace.status != SolveStatus::MaxIters {
            break;
        }
    }

    trace.wall_time = started.elapsed();
    let k = obj.model(&x).map_err(|e| fail(e, &trace))?;
    Ok((k, trace))
}

fn negate(g: &ParamVector) -> ParamVector {
    ParamVector(g.0.iter().map(|v| -v).collect())
}
