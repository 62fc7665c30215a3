use std::ops::Range;

use sparsecast_core::tensor::KruskalTensor;
use sparsecast_core::{Error, Result};

/// One supervised window.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// `[A[i,:], B[j,:], v_ij(k−w), …, v_ij(k−1)]`
    pub features: Vec<f64>,
    /// `v_ij(k)`
    pub target: f64,
    pub client: usize,
    pub transaction: usize,
    pub slice: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesDataset {
    pub rank: usize,
    pub window: usize,
    pub samples: Vec<Sample>,
}

impl SeriesDataset {
    pub fn feature_dim(&self) -> usize {
        2 * self.rank + self.window
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// The rank-summed latent series of pair `(i, j)` over every slice.
pub fn latent_series(k: &KruskalTensor, i: usize, j: usize) -> Vec<f64> {
    (0..k.shape()[2]).map(|t| k.value_at(i, j, t)).collect()
}

/// Latent-row prefix `[A[i,:], B[j,:]]` shared by every window of a pair.
pub(crate) fn latent_rows(k: &KruskalTensor, i: usize, j: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * k.rank());
    v.extend_from_slice(k.a().row(i));
    v.extend_from_slice(k.b().row(j));
    v
}

/// One sample per `(i, j, k)` with `k` in `train_slices` and `k ≥ window`,
/// ordered client-major, then transaction, then slice.
pub fn build_dataset(
    k: &KruskalTensor,
    window: usize,
    train_slices: Range<usize>,
) -> Result<SeriesDataset> {
    let [ni, nj, nk] = k.shape();
    if window == 0 {
        return Err(Error::Argument("window must be at least 1".into()));
    }
    if train_slices.end > nk || train_slices.is_empty() {
        return Err(Error::Argument(format!(
            "train slices {train_slices:?} do not fit {nk} slices"
        )));
    }
    if window >= train_slices.len() {
        return Err(Error::Argument(format!(
            "window {window} needs more than {} train slices",
            train_slices.len()
        )));
    }
    let first = train_slices.start.max(window);
    let mut samples = Vec::with_capacity(ni * nj * (train_slices.end - first));
    for i in 0..ni {
        for j in 0..nj {
            let series = latent_series(k, i, j);
            let rows = latent_rows(k, i, j);
            for t in first..train_slices.end {
                let mut features = rows.clone();
                features.extend_from_slice(&series[t - window..t]);
                samples.push(Sample {
                    features,
                    target: series[t],
                    client: i,
                    transaction: j,
                    slice: t,
                });
            }
        }
    }
    Ok(SeriesDataset {
        rank: k.rank(),
        window,
        samples,
    })
}
