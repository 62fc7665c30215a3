use super::dense::DenseTensor3;
use super::matrix::{khatri_rao, Matrix};
use super::sparse::SparseTensor3;
use super::Shape3;
use crate::error::{Error, Result};

/// Rank-R CP model `Σ_r a_r ∘ b_r ∘ c_r` held as three factor matrices.
///
/// Column `r` of factor `n` is the mode-n vector of the r-th rank-one term.
/// There is no separate weight vector; scale lives in the factors.
#[derive(Debug, Clone, PartialEq)]
pub struct KruskalTensor {
    factors: [Matrix; 3],
}

impl KruskalTensor {
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let rank = a.cols();
        if rank == 0 {
            return Err(Error::arg("rank must be at least 1"));
        }
        if b.cols() != rank || c.cols() != rank {
            return Err(Error::dim(format!(
                "factor column counts differ: {}, {}, {}",
                rank,
                b.cols(),
                c.cols()
            )));
        }
        if [&a, &b, &c].iter().any(|m| m.rows() == 0) {
            return Err(Error::dim("factor matrices must have at least one row"));
        }
        if ![&a, &b, &c].iter().all(|m| m.is_finite()) {
            return Err(Error::arg("factor entries must be finite"));
        }
        Ok(Self { factors: [a, b, c] })
    }

    pub fn zeros(shape: Shape3, rank: usize) -> Result<Self> {
        Self::new(
            Matrix::zeros(shape[0], rank),
            Matrix::zeros(shape[1], rank),
            Matrix::zeros(shape[2], rank),
        )
    }

    pub fn rank(&self) -> usize {
        self.factors[0].cols()
    }

    pub fn shape(&self) -> Shape3 {
        [
            self.factors[0].rows(),
            self.factors[1].rows(),
            self.factors[2].rows(),
        ]
    }

    pub fn factors(&self) -> &[Matrix; 3] {
        &self.factors
    }

    pub fn a(&self) -> &Matrix {
        &self.factors[0]
    }

    pub fn b(&self) -> &Matrix {
        &self.factors[1]
    }

    pub fn c(&self) -> &Matrix {
        &self.factors[2]
    }

    pub fn into_factors(self) -> [Matrix; 3] {
        self.factors
    }

    /// Reconstructed value `Σ_r A[i,r] B[j,r] C[k,r]`.
    #[inline]
    pub fn value_at(&self, i: usize, j: usize, k: usize) -> f64 {
        let (a, b, c) = (self.a().row(i), self.b().row(j), self.c().row(k));
        a.iter()
            .zip(b)
            .zip(c)
            .map(|((x, y), z)| x * y * z)
            .sum()
    }

    pub fn to_dense(&self) -> DenseTensor3 {
        let [ni, nj, nk] = self.shape();
        let mut d = DenseTensor3::zeros(self.shape());
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    d.set(i, j, k, self.value_at(i, j, k));
                }
            }
        }
        d
    }

    /// `‖K‖²_F = Σ_{r,s} (AᵀA ∗ BᵀB ∗ CᵀC)[r,s]`, computed from Gram matrices.
    pub fn norm_sq(&self) -> f64 {
        let g = self
            .a()
            .gram()
            .hadamard(&self.b().gram())
            .and_then(|m| m.hadamard(&self.c().gram()))
            .expect("gram matrices share the rank");
        g.as_slice().iter().sum()
    }

    /// `⟨X, K⟩` summed over the stored cells of `x` only, O(nnz·R).
    pub fn inner_sparse(&self, x: &SparseTensor3) -> Result<f64> {
        if x.shape() != self.shape() {
            return Err(Error::dim(format!(
                "sparse shape {:?} vs kruskal shape {:?}",
                x.shape(),
                self.shape()
            )));
        }
        Ok(x.entries()
            .iter()
            .map(|e| e.value * self.value_at(e.i, e.j, e.k))
            .sum())
    }

    /// Khatri-Rao product of the two factors other than `mode`, ordered so
    /// that `X_(n) ≈ F_n · kr_others(n)ᵀ`.
    pub fn khatri_rao_others(&self, mode: usize) -> Result<Matrix> {
        match mode {
            1 => khatri_rao(self.c(), self.b()),
            2 => khatri_rao(self.c(), self.a()),
            3 => khatri_rao(self.b(), self.a()),
            _ => Err(Error::arg(format!("mode must be 1, 2 or 3, got {mode}"))),
        }
    }

    /// Flattens the factors into the stacked parameter vector: every column of
    /// A, then of B, then of C.
    pub fn flatten(&self) -> ParamVector {
        let mut data = Vec::with_capacity(param_len(self.shape(), self.rank()));
        for f in &self.factors {
            for r in 0..f.cols() {
                data.extend((0..f.rows()).map(|i| f.get(i, r)));
            }
        }
        ParamVector(data)
    }

    pub fn unflatten(x: &ParamVector, shape: Shape3, rank: usize) -> Result<Self> {
        let expected = param_len(shape, rank);
        if x.len() != expected {
            return Err(Error::dim(format!(
                "parameter vector has length {}, expected {expected} for shape {shape:?} at rank {rank}",
                x.len()
            )));
        }
        let mut offset = 0;
        let mut take = |n: usize| {
            let block = &x.0[offset..offset + n * rank];
            offset += n * rank;
            Matrix::from_fn(n, rank, |i, r| block[r * n + i])
        };
        let a = take(shape[0]);
        let b = take(shape[1]);
        let c = take(shape[2]);
        Self::new(a, b, c)
    }
}

/// Number of free parameters in a rank-`rank` model of `shape`.
pub fn param_len(shape: Shape3, rank: usize) -> usize {
    rank * shape.iter().sum::<usize>()
}

/// Flat parameter vector with the layout produced by [`KruskalTensor::flatten`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &ParamVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self + alpha * dir`
    pub fn axpy(&self, alpha: f64, dir: &ParamVector) -> ParamVector {
        ParamVector(
            self.0
                .iter()
                .zip(&dir.0)
                .map(|(x, d)| x + alpha * d)
                .collect(),
        )
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_kruskal(rng: &mut ChaCha8Rng, shape: Shape3, rank: usize) -> KruskalTensor {
        let mut m = |n| Matrix::from_fn(n, rank, |_, _| rng.random_range(-1.0..1.0));
        let (a, b, c) = (m(shape[0]), m(shape[1]), m(shape[2]));
        KruskalTensor::new(a, b, c).unwrap()
    }

    #[test]
    fn single_outer_product() {
        let k = KruskalTensor::new(
            Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap(),
            Matrix::from_rows(&[vec![3.0]]).unwrap(),
            Matrix::from_rows(&[vec![4.0]]).unwrap(),
        )
        .unwrap();
        let d = k.to_dense();
        assert_eq!(d.shape(), [2, 1, 1]);
        assert_eq!(d.values(), &[12.0, 24.0]);
    }

    #[test]
    fn zero_factor_gives_zero_tensor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = random_kruskal(&mut rng, [3, 2, 2], 2);
        let z = KruskalTensor::new(Matrix::zeros(3, 2), k.b().clone(), k.c().clone()).unwrap();
        assert!(z.to_dense().values().iter().all(|&v| v == 0.0));
        assert_eq!(z.norm_sq(), 0.0);
    }

    #[test]
    fn dense_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = random_kruskal(&mut rng, [3, 3, 3], 2);
        let d = k.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    let mut v = 0.0;
                    for r in 0..2 {
                        v += k.a().get(i, r) * k.b().get(j, r) * k.c().get(l, r);
                    }
                    assert!((d.get(i, j, l) - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unit_rank_one_has_unit_norm() {
        let s = 0.5f64.sqrt();
        let k = KruskalTensor::new(
            Matrix::from_rows(&[vec![s], vec![s]]).unwrap(),
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            Matrix::from_rows(&[vec![0.6], vec![0.8]]).unwrap(),
        )
        .unwrap();
        assert!((k.norm_sq() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn norm_sq_matches_dense_and_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = random_kruskal(&mut rng, [4, 3, 2], 3);
        let dense = k.to_dense().norm_sq();
        assert!((k.norm_sq() - dense).abs() <= 1e-10 * dense.max(1.0));

        let mut a2 = k.a().clone();
        a2.scale(2.0);
        let k2 = KruskalTensor::new(a2, k.b().clone(), k.c().clone()).unwrap();
        assert!((k2.norm_sq() - 4.0 * k.norm_sq()).abs() < 1e-10);
    }

    #[test]
    fn inner_sparse_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = random_kruskal(&mut rng, [4, 3, 5], 2);
        let empty = SparseTensor3::empty([4, 3, 5]).unwrap();
        assert_eq!(k.inner_sparse(&empty).unwrap(), 0.0);

        let full = k.to_dense().to_sparse_full();
        assert!((k.inner_sparse(&full).unwrap() - k.norm_sq()).abs() < 1e-10);

        let mut x = DenseTensor3::zeros([4, 3, 5]);
        for idx in 0..60 {
            if rng.random_bool(0.3) {
                let (i, j, l) = (idx % 4, (idx / 4) % 3, idx / 12);
                x.set(i, j, l, rng.random_range(-2.0..2.0));
            }
        }
        let brute = x.inner(&k.to_dense());
        assert!((k.inner_sparse(&x.to_sparse()).unwrap() - brute).abs() < 1e-10);

        let wrong = SparseTensor3::empty([4, 3, 4]).unwrap();
        assert!(matches!(k.inner_sparse(&wrong), Err(Error::Dimension(_))));
    }

    #[test]
    fn flatten_layout_and_round_trip() {
        let k = KruskalTensor::new(
            Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap(),
            Matrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap(),
            Matrix::from_rows(&[vec![5.0], vec![6.0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(k.flatten().0, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = random_kruskal(&mut rng, [5, 4, 3], 3);
        let x = k.flatten();
        assert_eq!(x.len(), 3 * 12);
        assert_eq!(KruskalTensor::unflatten(&x, [5, 4, 3], 3).unwrap(), k);
    }

    #[test]
    fn unflatten_wrong_length() {
        let x = ParamVector(vec![0.0; 7]);
        assert!(matches!(
            KruskalTensor::unflatten(&x, [2, 2, 2], 1),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn unfolding_of_rank_one_mode_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let k = random_kruskal(&mut rng, [3, 4, 2], 1);
        let x2 = k.to_dense().to_sparse_full().unfold(2).unwrap().to_dense();
        let expected = k
            .b()
            .matmul(&k.khatri_rao_others(2).unwrap().transpose())
            .unwrap();
        assert!(x2.max_abs_diff(&expected) < 1e-12);
    }
}
