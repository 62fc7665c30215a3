use sparsecast_core::tensor::KruskalTensor;
use sparsecast_core::{Error, Result};

use crate::dataset::{latent_rows, latent_series};

/// Anything that maps one feature vector to a one-step forecast.
pub trait Forecaster {
    fn feature_dim(&self) -> usize;
    fn predict_one(&self, features: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RollMode {
    /// Each prediction is pushed into the lag buffer for the next step.
    #[default]
    ClosedLoop,
    /// Every step reads its lags from the latent series itself.
    OpenLoop,
}

/// Forecasts slices `origin, origin+1, …, origin+horizon−1` of pair `(i, j)`
/// starting from the `window` latent values before `origin`.
pub fn predict_rolling<F: Forecaster + ?Sized>(
    model: &F,
    k: &KruskalTensor,
    (i, j): (usize, usize),
    horizon: usize,
    window: usize,
    origin: usize,
    mode: RollMode,
) -> Result<Vec<f64>> {
    let [ni, nj, nk] = k.shape();
    if horizon == 0 {
        return Err(Error::Argument("horizon must be at least 1".into()));
    }
    if window == 0 || window > origin {
        return Err(Error::Argument(format!(
            "window {window} needs at least {window} slices before origin {origin}"
        )));
    }
    if i >= ni || j >= nj {
        return Err(Error::Argument(format!("pair ({i}, {j}) outside {ni}×{nj}")));
    }
    if 2 * k.rank() + window != model.feature_dim() {
        return Err(Error::Dimension(format!(
            "model expects {} features, rank {} and window {window} give {}",
            model.feature_dim(),
            k.rank(),
            2 * k.rank() + window
        )));
    }
    if mode == RollMode::OpenLoop && origin + horizon > nk {
        return Err(Error::Argument(format!(
            "open-loop forecast to slice {} needs {} slices, factors have {nk}",
            origin + horizon - 1,
            origin + horizon
        )));
    }
    let series = latent_series(k, i, j);
    let rows = latent_rows(k, i, j);
    let mut buffer: Vec<f64> = series[origin - window..origin.min(nk)].to_vec();
    if buffer.len() < window {
        return Err(Error::Argument(format!("origin {origin} lies past the {nk} factor slices")));
    }
    let mut features = rows.clone();
    let mut out = Vec::with_capacity(horizon);
    for step in 0..horizon {
        features.truncate(rows.len());
        match mode {
            RollMode::ClosedLoop => features.extend_from_slice(&buffer[buffer.len() - window..]),
            RollMode::OpenLoop => {
                let t = origin + step;
                features.extend_from_slice(&series[t - window..t]);
            }
        }
        let y = model.predict_one(&features);
        if !y.is_finite() {
            return Err(Error::Numerical {
                message: format!("non-finite forecast at step {}", step + 1),
                trace: None,
            });
        }
        out.push(y);
        buffer.push(y);
    }
    Ok(out)
}
