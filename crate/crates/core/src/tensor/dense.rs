use super::sparse::{Entry, SparseTensor3};
use super::Shape3;
use crate::error::{Error, Result};

/// Fully materialized third-order tensor, mode-1 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor3 {
    shape: Shape3,
    values: Vec<f64>,
}

impl DenseTensor3 {
    pub fn zeros(shape: Shape3) -> Self {
        Self {
            shape,
            values: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_values(shape: Shape3, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.iter().product::<usize>() {
            return Err(Error::dim(format!(
                "{} values for shape {shape:?}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("dense tensor values must be finite"));
        }
        Ok(Self { shape, values })
    }

    pub fn from_sparse(t: &SparseTensor3) -> Self {
        let mut d = Self::zeros(t.shape());
        for e in t.entries() {
            d.set(e.i, e.j, e.k, e.value);
        }
        d
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.shape[0] * (j + self.shape[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.index(i, j, k);
        self.values[idx] = v;
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn inner(&self, other: &DenseTensor3) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    /// Sparse copy holding only the nonzero cells.
    pub fn to_sparse(&self) -> SparseTensor3 {
        self.collect_entries(|v| v != 0.0)
    }

    /// Sparse copy holding every cell, zeros included.
    pub fn to_sparse_full(&self) -> SparseTensor3 {
        self.collect_entries(|_| true)
    }

    fn collect_entries(&self, keep: impl Fn(f64) -> bool) -> SparseTensor3 {
        let [ni, nj, nk] = self.shape;
        let mut entries = Vec::new();
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    let value = self.get(i, j, k);
                    if keep(value) {
                        entries.push(Entry { i, j, k, value });
                    }
                }
            }
        }
        SparseTensor3::new(self.shape, entries).expect("dense cells are in bounds and unique")
    }
}
