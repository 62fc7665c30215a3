//! Bracketing line search for the strong Wolfe conditions with a safeguarded
//! cubic-interpolation zoom phase.

use crate::tensor::{dot, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WolfeParams {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant, `c1 < c2 < 1`.
    pub c2: f64,
    /// Cap on function evaluations per search.
    pub max_evals: usize,
    /// Upper bound for the bracketing phase.
    pub alpha_max: f64,
}

impl Default for WolfeParams {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.1,
            max_evals: 50,
            alpha_max: 1e10,
        }
    }
}

/// Result of a line search along `x + α·dir`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub alpha: f64,
    /// `f(x + α·dir)`
    pub value: f64,
    /// `∇f(x + α·dir)·dir`
    pub slope: f64,
    pub evals: usize,
    /// Both strong Wolfe conditions hold at `alpha`. When false, `alpha` is
    /// the trial with the lowest value seen (0 if nothing decreased).
    pub wolfe: bool,
}

/// Signals that the supplied direction is not a descent direction; the
/// caller should restart from steepest descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotDescent;

impl std::fmt::Display for NotDescent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("search direction is not a descent direction")
    }
}

impl std::error::Error for NotDescent {}

#[derive(Debug, Clone, Copy)]
struct Trial {
    alpha: f64,
    value: f64,
    slope: f64,
}

/// Strong Wolfe search on the scalar function `phi(α) = (f(x+α·d), ∇f(x+α·d)·d)`.
///
/// `value0` and `slope0` are `phi(0)`. Non-finite trial values are treated as
/// `+∞`, which shrinks the bracket.
pub fn strong_wolfe<F>(
    mut phi: F,
    value0: f64,
    slope0: f64,
    alpha0: f64,
    params: &WolfeParams,
) -> Result<Step, NotDescent>
where
    F: FnMut(f64) -> (f64, f64),
{
    if slope0.is_nan() || slope0 >= 0.0 {
        return Err(NotDescent);
    }
    let mut evals = 0usize;
    let mut best = Trial {
        alpha: 0.0,
        value: value0,
        slope: slope0,
    };
    let mut eval = |alpha: f64, evals: &mut usize, best: &mut Trial| {
        *evals += 1;
        let (mut value, mut slope) = phi(alpha);
        if !value.is_finite() {
            value = f64::INFINITY;
            slope = f64::NAN;
        }
        let t = Trial {
            alpha,
            value,
            slope,
        };
        if t.value < best.value {
            *best = t;
        }
        t
    };
    let armijo = |t: &Trial| t.value <= value0 + params.c1 * t.alpha * slope0;
    let curvature = |t: &Trial| t.slope.abs() <= -params.c2 * slope0;
    let accept = |t: Trial, evals: usize| Step {
        alpha: t.alpha,
        value: t.value,
        slope: t.slope,
        evals,
        wolfe: true,
    };

    let mut prev = Trial {
        alpha: 0.0,
        value: value0,
        slope: slope0,
    };
    let mut alpha = alpha0.clamp(f64::MIN_POSITIVE, params.alpha_max);
    let mut bracket = None;
    while evals < params.max_evals {
        let cur = eval(alpha, &mut evals, &mut best);
        if !armijo(&cur) || (evals > 1 && cur.value >= prev.value) {
            bracket = Some((prev, cur));
            break;
        }
        if curvature(&cur) {
            return Ok(accept(cur, evals));
        }
        if cur.slope >= 0.0 {
            bracket = Some((cur, prev));
            break;
        }
        if alpha >= params.alpha_max {
            break;
        }
        prev = cur;
        alpha = (2.0 * alpha).min(params.alpha_max);
    }

    if let Some((mut lo, mut hi)) = bracket {
        while evals < params.max_evals {
            let (a, b) = if lo.alpha < hi.alpha {
                (lo.alpha, hi.alpha)
            } else {
                (hi.alpha, lo.alpha)
            };
            let width = b - a;
            if width <= f64::EPSILON * b.max(1e-300) {
                break;
            }
            let margin = 0.1 * width;
            let alpha = match cubic_minimizer(&lo, &hi) {
                Some(t) if t > a + margin && t < b - margin => t,
                _ => 0.5 * (a + b),
            };
            let cur = eval(alpha, &mut evals, &mut best);
            if !armijo(&cur) || cur.value >= lo.value {
                hi = cur;
            } else {
                if curvature(&cur) {
                    return Ok(accept(cur, evals));
                }
                if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
    }

    Ok(Step {
        alpha: best.alpha,
        value: best.value,
        slope: best.slope,
        evals,
        wolfe: false,
    })
}

/// Minimizer of the cubic interpolating values and slopes at two trials.
fn cubic_minimizer(p: &Trial, q: &Trial) -> Option<f64> {
    if !(p.value.is_finite() && q.value.is_finite() && p.slope.is_finite() && q.slope.is_finite())
    {
        return None;
    }
    let d1 = p.slope + q.slope - 3.0 * (p.value - q.value) / (p.alpha - q.alpha);
    let disc = d1 * d1 - p.slope * q.slope;
    if disc < 0.0 {
        return None;
    }
    let d2 = (q.alpha - p.alpha).signum() * disc.sqrt();
    let t = q.alpha - (q.alpha - p.alpha) * (q.slope + d2 - d1) / (q.slope - p.slope + 2.0 * d2);
    t.is_finite().then_some(t)
}

/// Strong Wolfe search along `dir` from `x` for an objective `f` with gradient `g`.
///
/// Returns the accepted step length and the number of function evaluations.
pub fn strong_wolfe_search<F, G>(
    x: &ParamVector,
    dir: &ParamVector,
    f: F,
    g: G,
    alpha0: f64,
    params: &WolfeParams,
) -> Result<(f64, usize), NotDescent>
where
    F: Fn(&ParamVector) -> f64,
    G: Fn(&ParamVector) -> ParamVector,
{
    let slope0 = dot(&g(x).0, &dir.0);
    let phi = |alpha: f64| {
        let xa = x.axpy(alpha, dir);
        (f(&xa), dot(&g(&xa).0, &dir.0))
    };
    let step = strong_wolfe(phi, f(x), slope0, alpha0, params)?;
    Ok((step.alpha, step.evals))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn holds(
        f: &dyn Fn(&ParamVector) -> f64,
        g: &dyn Fn(&ParamVector) -> ParamVector,
        x: &ParamVector,
        d: &ParamVector,
        alpha: f64,
        p: &WolfeParams,
    ) -> bool {
        let slope0 = dot(&g(x).0, &d.0);
        let xa = x.axpy(alpha, d);
        let armijo = f(&xa) <= f(x) + p.c1 * alpha * slope0;
        let curv = dot(&g(&xa).0, &d.0).abs() <= p.c2 * slope0.abs();
        armijo && curv
    }

    #[test]
    fn unit_step_on_scalar_quadratic() {
        let f = |x: &ParamVector| 0.5 * x.0[0] * x.0[0];
        let g = |x: &ParamVector| ParamVector(vec![x.0[0]]);
        let x = ParamVector(vec![1.0]);
        let d = ParamVector(vec![-1.0]);
        let p = WolfeParams::default();
        let (alpha, evals) = strong_wolfe_search(&x, &d, f, g, 1.0, &p).unwrap();
        assert_eq!(alpha, 1.0);
        assert_eq!(evals, 1);
        assert!(holds(&f, &g, &x, &d, alpha, &p));
    }

    #[test]
    fn convex_quadratic_step_satisfies_both_conditions() {
        // f(x) = xᵀQx with Q = diag(1, 10, 100), minimizer at 0.
        let q = [1.0, 10.0, 100.0];
        let f = move |x: &ParamVector| x.0.iter().zip(q).map(|(v, c)| c * v * v).sum::<f64>();
        let g = move |x: &ParamVector| ParamVector(x.0.iter().zip(q).map(|(v, c)| 2.0 * c * v).collect());
        let p = WolfeParams::default();
        for (x, alpha0) in [
            (ParamVector(vec![1.0, 1.0, 1.0]), 1.0),
            (ParamVector(vec![3.0, -0.5, 0.01]), 1e-6),
            (ParamVector(vec![-2.0, 0.3, 0.2]), 50.0),
        ] {
            let d = ParamVector(g(&x).0.iter().map(|v| -v).collect());
            let (alpha, _) = strong_wolfe_search(&x, &d, f, g, alpha0, &p).unwrap();
            assert!(alpha > 0.0);
            assert!(holds(&f, &g, &x, &d, alpha, &p), "alpha0 = {alpha0}, alpha = {alpha}");
        }
    }

    #[test]
    fn ascent_direction_signals_restart() {
        let f = |x: &ParamVector| 0.5 * x.0[0] * x.0[0];
        let g = |x: &ParamVector| ParamVector(vec![x.0[0]]);
        let x = ParamVector(vec![1.0]);
        let d = ParamVector(vec![1.0]);
        assert_eq!(
            strong_wolfe_search(&x, &d, f, g, 1.0, &WolfeParams::default()),
            Err(NotDescent)
        );
    }

    #[test]
    fn non_finite_trials_shrink_the_step() {
        // Blows up beyond 2; minimizer of the finite part at 1.
        let phi = |a: f64| {
            if a > 2.0 {
                (f64::NAN, f64::NAN)
            } else {
                ((a - 1.0).powi(2), 2.0 * (a - 1.0))
            }
        };
        let step = strong_wolfe(phi, 1.0, -2.0, 100.0, &WolfeParams::default()).unwrap();
        assert!(step.wolfe);
        assert!((step.alpha - 1.0).abs() < 0.2);
    }

    #[test]
    fn exhausted_budget_returns_best_decrease() {
        let p = WolfeParams {
            max_evals: 2,
            ..WolfeParams::default()
        };
        // Curvature can never be met: slope stays at -1 everywhere.
        let phi = |a: f64| (-a, -1.0);
        let step = strong_wolfe(phi, 0.0, -1.0, 1.0, &p).unwrap();
        assert!(!step.wolfe);
        assert_eq!(step.alpha, 2.0);
        assert_eq!(step.evals, 2);
    }
}
