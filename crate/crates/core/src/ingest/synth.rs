use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{DEFAULT_CLIENTS, DEFAULT_LABELS, DEFAULT_SLICES};
use crate::error::{Error, Result};
use crate::tensor::{Entry, KruskalTensor, Matrix, Shape3, SparseTensor3};

/// Parameters of the synthetic activity generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub shape: Shape3,
    pub true_rank: usize,
    /// Standard deviation of the additive Gaussian noise.
    pub noise_sigma: f64,
    /// Probability that a cell is zeroed after noise is added.
    pub sparsity: f64,
    pub seed: u64,
    /// Period, in slices, of the seasonal component of the time factor.
    pub period: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            shape: [DEFAULT_CLIENTS, DEFAULT_LABELS, DEFAULT_SLICES],
            true_rank: 5,
            noise_sigma: 0.1,
            sparsity: 0.8,
            seed: 0,
            period: 4.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shape.contains(&0) {
            return Err(Error::arg("synthetic shape must be positive"));
        }
        if self.true_rank == 0 {
            return Err(Error::arg("true rank must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::arg("noise sigma must be a nonnegative number"));
        }
        if !(0.0..1.0).contains(&self.sparsity) {
            return Err(Error::arg(format!(
                "sparsity must lie in [0, 1), got {}",
                self.sparsity
            )));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::arg("period must be positive"));
        }
        Ok(())
    }
}

/// Draws a nonnegative low-rank ground truth and a noisy, sparsified
/// observation of it.
///
/// Client and label factors are uniform in `[0, 1)`. Column `r` of the time
/// factor is `1 + a_r·sin(2πk/period + φ_r) + b_r·k/(K−1)` with
/// `a_r ∈ [0.2, 0.5)`, `b_r ∈ [−0.3, 0.3)` and a random phase, which stays
/// positive. Every cell then gets `N(0, σ²)` noise and is zeroed with
/// probability `sparsity`; zero cells are not stored.
pub fn synth_generate(cfg: &SynthConfig) -> Result<(SparseTensor3, KruskalTensor)> {
    cfg.validate()?;
    let [ni, nj, nk] = cfg.shape;
    let rank = cfg.true_rank;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let a = Matrix::from_fn(ni, rank, |_, _| rng.random_range(0.0..1.0));
    let b = Matrix::from_fn(nj, rank, |_, _| rng.random_range(0.0..1.0));
    let waves: Vec<(f64, f64, f64)> = (0..rank)
        .map(|_| {
            (
                rng.random_range(0.2..0.5),
                rng.random_range(-0.3..0.3),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let span = (nk.max(2) - 1) as f64;
    let c = Matrix::from_fn(nk, rank, |k, r| {
        let (amp, trend, phase) = waves[r];
        let k = k as f64;
        1.0 + amp * (2.0 * PI * k / cfg.period + phase).sin() + trend * k / span
    });
    let truth = KruskalTensor::new(a, b, c)?;

    let noise = Normal::new(0.0, cfg.noise_sigma)
        .map_err(|e| Error::arg(format!("noise distribution: {e}")))?;
    let mut entries = Vec::new();
    for k in 0..nk {
        for j in 0..nj {
            for i in 0..ni {
                let value = truth.value_at(i, j, k) + noise.sample(&mut rng);
                let dropped = rng.random::<f64>() < cfg.sparsity;
                if !dropped && value != 0.0 {
                    entries.push(Entry { i, j, k, value });
                }
            }
        }
    }
    Ok((SparseTensor3::new(cfg.shape, entries)?, truth))
}
