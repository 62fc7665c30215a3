use std::collections::HashSet;

use super::matrix::Matrix;
use super::Shape3;
use crate::error::{Error, Result};

/// One stored cell of a [`SparseTensor3`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

/// Third-order tensor in coordinate format.
///
/// Unstored cells are zeros: the objective treats the tensor as fully
/// observed, so sparsity is a storage device only. Entries are kept sorted by
/// their mode-1-fastest linear index, which makes every reduction over them
/// independent of the order they were supplied in.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor3 {
    shape: Shape3,
    entries: Vec<Entry>,
}

impl SparseTensor3 {
    pub fn new(shape: Shape3, mut entries: Vec<Entry>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::dim(format!("shape {shape:?} has a zero extent")));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.i >= shape[0] || e.j >= shape[1] || e.k >= shape[2] {
                return Err(Error::dim(format!(
                    "entry ({}, {}, {}) outside shape {shape:?}",
                    e.i, e.j, e.k
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::arg(format!(
                    "non-finite value at ({}, {}, {})",
                    e.i, e.j, e.k
                )));
            }
            if !seen.insert((e.i, e.j, e.k)) {
                return Err(Error::arg(format!(
                    "duplicate entry at ({}, {}, {})",
                    e.i, e.j, e.k
                )));
            }
        }
        entries.sort_unstable_by_key(|e| (e.k, e.j, e.i));
        Ok(Self { shape, entries })
    }

    pub fn empty(shape: Shape3) -> Result<Self> {
        Self::new(shape, Vec::new())
    }

    pub fn from_triples(
        shape: Shape3,
        triples: impl IntoIterator<Item = (usize, usize, usize, f64)>,
    ) -> Result<Self> {
        let entries = triples
            .into_iter()
            .map(|(i, j, k, value)| Entry { i, j, k, value })
            .collect();
        Self::new(shape, entries)
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.value * e.value).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Mode-n matricization (`mode` is 1, 2 or 3).
    ///
    /// Column ordering follows the convention `X_(1) = A (C ⊙ B)^T`,
    /// `X_(2) = B (C ⊙ A)^T`, `X_(3) = C (B ⊙ A)^T`.
    pub fn unfold(&self, mode: usize) -> Result<SparseMatrix> {
        let [ni, nj, nk] = self.shape;
        let (rows, cols) = match mode {
            1 => (ni, nj * nk),
            2 => (nj, ni * nk),
            3 => (nk, ni * nj),
            _ => return Err(Error::arg(format!("mode must be 1, 2 or 3, got {mode}"))),
        };
        let entries = self
            .entries
            .iter()
            .map(|e| match mode {
                1 => (e.i, e.j + nj * e.k, e.value),
                2 => (e.j, e.i + ni * e.k, e.value),
                _ => (e.k, e.i + ni * e.j, e.value),
            })
            .collect();
        Ok(SparseMatrix {
            rows,
            cols,
            entries,
        })
    }
}

/// Coordinate-format matrix produced by [`SparseTensor3::unfold`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            m.set(r, c, m.get(r, c) + v);
        }
        m
    }

    /// `self * rhs` with `rhs` dense.
    pub fn mul_dense(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows() {
            return Err(Error::dim(format!(
                "cannot multiply sparse {}x{} by {}x{}",
                self.rows,
                self.cols,
                rhs.rows(),
                rhs.cols()
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols());
        for &(r, c, v) in &self.entries {
            for (o, &b) in out.row_mut(r).iter_mut().zip(rhs.row(c)) {
                *o += v * b;
            }
        }
        Ok(out)
    }
}
