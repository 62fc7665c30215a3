//! CP fitting: the least-squares objective and its gradient, the nonlinear
//! conjugate gradient solver (Hestenes-Stiefel directions, strong Wolfe line
//! search) and an alternating least squares baseline.

mod als;
mod line_search;
mod ncg;
mod objective;
mod trace;

pub use als::{solve_als, AlsConfig};
pub use line_search::{strong_wolfe, strong_wolfe_search, NotDescent, Step, WolfeParams};
pub use ncg::{solve, NcgConfig};
pub use objective::{gradient, objective, CpObjective};
pub use trace::{SolveStatus, SolveTrace, TraceRecord};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::{param_len, KruskalTensor, ParamVector, Shape3, SparseTensor3};
use crate::Result;

/// Random starting point shared by both solvers: every parameter drawn
/// uniformly from `[-scale, scale]`, in parameter-vector order.
pub fn random_init(shape: Shape3, rank: usize, scale: f64, seed: u64) -> Result<KruskalTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = ParamVector(
        (0..param_len(shape, rank))
            .map(|_| rng.random_range(-scale..=scale))
            .collect(),
    );
    KruskalTensor::unflatten(&x, shape, rank)
}

/// `‖X − K‖ / ‖X‖` recovered from an objective value `W = ½‖X − K‖²`.
///
/// The three-summand objective can dip a few ulps below zero near an exact
/// fit; such values count as a zero residual.
pub fn relative_residual(objective: f64, t: &SparseTensor3) -> f64 {
    relative_residual_from_norm(objective, t.norm())
}

pub(crate) fn relative_residual_from_norm(objective: f64, norm: f64) -> f64 {
    (2.0 * objective).max(0.0).sqrt() / norm
}
