//! Sparse third-order activity tensors, their CP decomposition by nonlinear
//! conjugate gradient (with an ALS baseline), synthetic and CSV ingestion,
//! and the regression metrics used to score forecasts.

pub mod cp;
mod error;
pub mod ingest;
pub mod metrics;
pub mod tensor;

pub use error::{Error, Result};
