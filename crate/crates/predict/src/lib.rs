//! Forecasting on top of a CP decomposition.
//!
//! The latent series `v_ij(k) = Σ_r A[i,r]·B[j,r]·C[k,r]` of each
//! (client, transaction) pair is cut into supervised windows, a model is
//! fitted to map `[A[i,:], B[j,:], v_ij(k−w..k)]` to `v_ij(k)`, and the
//! model is rolled forward a few slices past the training span.

pub mod adam;
mod dataset;
pub mod models;
mod predictor;
mod rolling;

pub use dataset::{build_dataset, latent_series, Sample, SeriesDataset};
pub use predictor::{train, train_with, Architecture, ModelKind, Predictor, TrainConfig};
pub use rolling::{predict_rolling, Forecaster, RollMode};

pub use sparsecast_core::{Error, Result};
