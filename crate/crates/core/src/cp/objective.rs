use crate::error::{Error, Result};
use crate::tensor::{mttkrp, param_len, KruskalTensor, Matrix, ParamVector, Shape3, SparseTensor3};

/// `W(x) = ½‖X‖² − ⟨X, K(x)⟩ + ½‖K(x)‖²` for a fixed data tensor and rank.
///
/// `½‖X‖²` is computed once; the inner product runs over the stored cells and
/// the model norm over R×R Gram matrices, so neither the model nor the
/// residual is ever materialized.
#[derive(Debug, Clone)]
pub struct CpObjective<'a> {
    tensor: &'a SparseTensor3,
    rank: usize,
    half_norm_sq: f64,
}

impl<'a> CpObjective<'a> {
    pub fn new(tensor: &'a SparseTensor3, rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::arg("rank must be at least 1"));
        }
        Ok(Self {
            tensor,
            rank,
            half_norm_sq: 0.5 * tensor.norm_sq(),
        })
    }

    pub fn shape(&self) -> Shape3 {
        self.tensor.shape()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn tensor(&self) -> &SparseTensor3 {
        self.tensor
    }

    pub fn param_len(&self) -> usize {
        param_len(self.shape(), self.rank)
    }

    pub fn model(&self, x: &ParamVector) -> Result<KruskalTensor> {
        KruskalTensor::unflatten(x, self.shape(), self.rank).map_err(|e| match e {
            Error::Argument(_) => Error::numerical("parameter vector is not finite", None),
            other => other,
        })
    }

    pub fn value(&self, x: &ParamVector) -> Result<f64> {
        let k = self.model(x)?;
        self.value_of(&k)
    }

    pub fn value_of(&self, k: &KruskalTensor) -> Result<f64> {
        let f = self.half_norm_sq - k.inner_sparse(self.tensor)? + 0.5 * k.norm_sq();
        if !f.is_finite() {
            return Err(Error::numerical("objective is not finite", None));
        }
        Ok(f)
    }

    pub fn gradient(&self, x: &ParamVector) -> Result<ParamVector> {
        let k = self.model(x)?;
        self.gradient_of(&k)
    }

    pub fn value_and_gradient(&self, x: &ParamVector) -> Result<(f64, ParamVector)> {
        let k = self.model(x)?;
        Ok((self.value_of(&k)?, self.gradient_of(&k)?))
    }

    /// `G_n = −X_(n)(⊙ others) + F_n (∗ of the other Gram matrices)`.
    pub fn gradient_of(&self, k: &KruskalTensor) -> Result<ParamVector> {
        let grams = k.factors().each_ref().map(Matrix::gram);
        let mut out = Vec::with_capacity(self.param_len());
        for mode in 1..=3 {
            let (p, q) = match mode {
                1 => (1, 2),
                2 => (0, 2),
                _ => (0, 1),
            };
            let h = grams[p].hadamard(&grams[q])?;
            let own = &k.factors()[mode - 1];
            let g = own.matmul(&h)?;
            let m = mttkrp(self.tensor, k, mode)?;
            for r in 0..g.cols() {
                for i in 0..g.rows() {
                    out.push(g.get(i, r) - m.get(i, r));
                }
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("gradient is not finite", None));
        }
        Ok(ParamVector(out))
    }
}

/// Objective value at `x` for data `t` at rank `rank`.
pub fn objective(x: &ParamVector, t: &SparseTensor3, rank: usize) -> Result<f64> {
    CpObjective::new(t, rank)?.value(x)
}

/// Analytic gradient at `x`, in parameter-vector layout.
pub fn gradient(x: &ParamVector, t: &SparseTensor3, rank: usize) -> Result<ParamVector> {
    CpObjective::new(t, rank)?.gradient(x)
}
