//! Dense, sparse and Kruskal third-order tensors and the kernels the solvers
//! are built from.

mod dense;
pub mod io;
mod kruskal;
mod matrix;
mod sparse;

pub use dense::DenseTensor3;
pub use kruskal::{param_len, KruskalTensor, ParamVector};
pub(crate) use kruskal::dot;
pub use matrix::{khatri_rao, Matrix};
pub use sparse::{Entry, SparseMatrix, SparseTensor3};

/// Extents `(I, J, K)` of a third-order tensor.
pub type Shape3 = [usize; 3];

/// Matricized-tensor-times-Khatri-Rao product `X_(mode) · (⊙ of the other
/// factors)` computed straight from the stored cells in O(nnz·R).
pub fn mttkrp(x: &SparseTensor3, k: &KruskalTensor, mode: usize) -> crate::Result<Matrix> {
    if x.shape() != k.shape() {
        return Err(crate::Error::Dimension(format!(
            "sparse shape {:?} vs kruskal shape {:?}",
            x.shape(),
            k.shape()
        )));
    }
    let rank = k.rank();
    let (own, f1, f2) = match mode {
        1 => (k.a(), k.b(), k.c()),
        2 => (k.b(), k.a(), k.c()),
        3 => (k.c(), k.a(), k.b()),
        _ => {
            return Err(crate::Error::Argument(format!(
                "mode must be 1, 2 or 3, got {mode}"
            )))
        }
    };
    let mut out = Matrix::zeros(own.rows(), rank);
    for e in x.entries() {
        let (row, p, q) = match mode {
            1 => (e.i, e.j, e.k),
            2 => (e.j, e.i, e.k),
            _ => (e.k, e.i, e.j),
        };
        let (u, v) = (f1.row(p), f2.row(q));
        for ((o, a), b) in out.row_mut(row).iter_mut().zip(u).zip(v) {
            *o += e.value * a * b;
        }
    }
    Ok(out)
}
