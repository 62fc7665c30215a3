use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{affine, affine_backward, glorot, split_blocks, Network, ParamLayout};

/// One-dimensional convolution over the lag window.
///
/// `filters` kernels of odd `width` slide over the lags with zero padding
/// (output length = window), pass through a ReLU, and are concatenated with
/// the latent rows. A rectified dense layer of `dense` units and a linear
/// output follow. Inputs are `[latent (latent_dim values), lags (window values)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cnn1d {
    latent_dim: usize,
    window: usize,
    filters: usize,
    width: usize,
    dense: usize,
    layout: ParamLayout,
    params: Vec<f64>,
}

struct Blocks {
    kernel: Range<usize>,
    kbias: Range<usize>,
    w1: Range<usize>,
    b1: Range<usize>,
    w2: Range<usize>,
    b2: Range<usize>,
}

struct Acts {
    conv: Vec<f64>,
    flat: Vec<f64>,
    hidden: Vec<f64>,
    y: f64,
}

impl Cnn1d {
    pub fn new<R: Rng>(
        latent_dim: usize,
        window: usize,
        filters: usize,
        width: usize,
        dense: usize,
        rng: &mut R,
    ) -> Self {
        assert!(width % 2 == 1, "kernel width must be odd");
        let mut net = Self {
            latent_dim,
            window,
            filters,
            width,
            dense,
            layout: ParamLayout::default(),
            params: Vec::new(),
        };
        let (layout, b) = net.build_layout();
        let mut params = vec![0.0; layout.len()];
        glorot(rng, &mut params[b.kernel], width, filters);
        glorot(rng, &mut params[b.w1], net.flat_dim(), dense);
        glorot(rng, &mut params[b.w2], dense, 1);
        net.layout = layout;
        net.params = params;
        net
    }

    fn flat_dim(&self) -> usize {
        self.filters * self.window + self.latent_dim
    }

    fn build_layout(&self) -> (ParamLayout, Blocks) {
        let mut l = ParamLayout::default();
        let b = Blocks {
            kernel: l.push("kernel", &[self.filters, self.width]),
            kbias: l.push("kernel_bias", &[self.filters]),
            w1: l.push("w1", &[self.dense, self.flat_dim()]),
            b1: l.push("b1", &[self.dense]),
            w2: l.push("w2", &[1, self.dense]),
            b2: l.push("b2", &[1]),
        };
        (l, b)
    }

    fn lag(&self, x: &[f64], t: isize) -> f64 {
        if t < 0 || t as usize >= self.window {
            0.0
        } else {
            x[self.latent_dim + t as usize]
        }
    }

    fn activations(&self, x: &[f64], b: &Blocks) -> Acts {
        let p = &self.params;
        let half = (self.width / 2) as isize;
        let kernel = &p[b.kernel.clone()];
        let mut conv = vec![0.0; self.filters * self.window];
        for f in 0..self.filters {
            let kf = &kernel[f * self.width..(f + 1) * self.width];
            for t in 0..self.window {
                let mut s = p[b.kbias.start + f];
                for (u, kv) in kf.iter().enumerate() {
                    s += kv * self.lag(x, t as isize + u as isize - half);
                }
                conv[f * self.window + t] = s;
            }
        }
        let mut flat: Vec<f64> = conv.iter().map(|v| v.max(0.0)).collect();
        flat.extend_from_slice(&x[..self.latent_dim]);
        let mut hidden = vec![0.0; self.dense];
        affine(&p[b.w1.clone()], &p[b.b1.clone()], &flat, &mut hidden);
        hidden.iter_mut().for_each(|v| *v = v.max(0.0));
        let mut y = [0.0];
        affine(&p[b.w2.clone()], &p[b.b2.clone()], &hidden, &mut y);
        Acts {
            conv,
            flat,
            hidden,
            y: y[0],
        }
    }
}

impl Network for Cnn1d {
    fn input_dim(&self) -> usize {
        self.latent_dim + self.window
    }

    fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, x: &[f64]) -> f64 {
        let (_, b) = self.build_layout();
        self.activations(x, &b).y
    }

    fn forward_backward(
        &self,
        x: &[f64],
        grad: &mut [f64],
        dloss: &mut dyn FnMut(f64) -> f64,
    ) -> f64 {
        let (_, b) = self.build_layout();
        let acts = self.activations(x, &b);
        let dy = dloss(acts.y);
        let p = &self.params;
        let [gk, gkb, gw1, gb1, gw2, gb2] =
            split_blocks(grad, [&b.kernel, &b.kbias, &b.w1, &b.b1, &b.w2, &b.b2]);

        let mut dhidden = vec![0.0; self.dense];
        affine_backward(&p[b.w2.clone()], &acts.hidden, &[dy], gw2, gb2, Some(&mut dhidden));
        for (d, h) in dhidden.iter_mut().zip(&acts.hidden) {
            if *h <= 0.0 {
                *d = 0.0;
            }
        }
        let mut dflat = vec![0.0; acts.flat.len()];
        affine_backward(&p[b.w1.clone()], &acts.flat, &dhidden, gw1, gb1, Some(&mut dflat));

        let half = (self.width / 2) as isize;
        for f in 0..self.filters {
            for t in 0..self.window {
                let idx = f * self.window + t;
                if acts.conv[idx] <= 0.0 {
                    continue;
                }
                let d = dflat[idx];
                gkb[f] += d;
                for u in 0..self.width {
                    gk[f * self.width + u] += d * self.lag(x, t as isize + u as isize - half);
                }
            }
        }
        acts.y
    }
}
