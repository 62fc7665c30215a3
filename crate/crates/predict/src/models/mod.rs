//! Model families. The three neural networks share the [`Network`] contract:
//! a flat parameter vector described by a [`ParamLayout`], a scalar forward
//! pass and a backward pass that accumulates parameter gradients.

mod cnn;
mod lstm;
mod mlp;
mod tree;

pub use cnn::Cnn1d;
pub use lstm::Lstm;
pub use mlp::Mlp;
pub use tree::{Node, RegressionTree};

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Named block of a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub dims: Vec<usize>,
    pub offset: usize,
}

impl ParamBlock {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Shape table of a network's parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub blocks: Vec<ParamBlock>,
}

impl ParamLayout {
    pub(crate) fn push(&mut self, name: &str, dims: &[usize]) -> std::ops::Range<usize> {
        let offset = self.len();
        let block = ParamBlock {
            name: name.to_owned(),
            dims: dims.to_vec(),
            offset,
        };
        let range = block.range();
        self.blocks.push(block);
        range
    }

    pub fn len(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.offset + b.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub trait Network {
    fn input_dim(&self) -> usize;
    fn layout(&self) -> &ParamLayout;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn forward(&self, x: &[f64]) -> f64;
    /// Runs the forward pass, asks `dloss` for `∂L/∂y` at the output `y`, and
    /// adds `∂L/∂θ` into `grad`. Returns `y`.
    fn forward_backward(&self, x: &[f64], grad: &mut [f64], dloss: &mut dyn FnMut(f64) -> f64)
        -> f64;
}

/// Glorot-uniform fill of a `fan_out × fan_in` weight block.
pub(crate) fn glorot<R: Rng>(rng: &mut R, w: &mut [f64], fan_in: usize, fan_out: usize) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    w.iter_mut().for_each(|v| *v = rng.random_range(-limit..limit));
}

/// `out = W·x + b` with `W` row-major `out.len() × x.len()`.
#[inline]
pub(crate) fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (o, (row, bias)) in out.iter_mut().zip(w.chunks_exact(n).zip(b)) {
        *o = bias + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
    }
}

/// Backward pass of [`affine`]: accumulates `∂W += dout ⊗ x`, `∂b += dout`
/// and, when requested, `dx = Wᵀ·dout`.
#[inline]
pub(crate) fn affine_backward(
    w: &[f64],
    x: &[f64],
    dout: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    let n = x.len();
    for ((d, grow), gbias) in dout.iter().zip(gw.chunks_exact_mut(n)).zip(gb.iter_mut()) {
        *gbias += d;
        if *d != 0.0 {
            for (g, xv) in grow.iter_mut().zip(x) {
                *g += d * xv;
            }
        }
    }
    if let Some(dx) = dx {
        dx.iter_mut().for_each(|v| *v = 0.0);
        for (d, row) in dout.iter().zip(w.chunks_exact(n)) {
            if *d != 0.0 {
                for (o, wv) in dx.iter_mut().zip(row) {
                    *o += d * wv;
                }
            }
        }
    }
}

#[inline]
pub(crate) fn relu_in_place(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
}

/// Splits `grad` into the disjoint mutable blocks named by `ranges`, which
/// must be sorted and non-overlapping.
pub(crate) fn split_blocks<'a, const N: usize>(
    mut grad: &'a mut [f64],
    ranges: [&std::ops::Range<usize>; N],
) -> [&'a mut [f64]; N] {
    let mut consumed = 0;
    ranges.map(|r| {
        let (_, rest) = std::mem::take(&mut grad).split_at_mut(r.start - consumed);
        let (block, rest) = rest.split_at_mut(r.len());
        grad = rest;
        consumed = r.end;
        block
    })
}
