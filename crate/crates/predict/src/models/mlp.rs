use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{affine, affine_backward, glorot, relu_in_place, split_blocks, Network, ParamLayout};

/// Two rectified hidden layers and a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    input: usize,
    hidden: [usize; 2],
    layout: ParamLayout,
    params: Vec<f64>,
}

struct Blocks {
    w1: Range<usize>,
    b1: Range<usize>,
    w2: Range<usize>,
    b2: Range<usize>,
    w3: Range<usize>,
    b3: Range<usize>,
}

impl Mlp {
    pub fn new<R: Rng>(input: usize, hidden: [usize; 2], rng: &mut R) -> Self {
        let (layout, b) = Self::build_layout(input, hidden);
        let mut params = vec![0.0; layout.len()];
        glorot(rng, &mut params[b.w1], input, hidden[0]);
        glorot(rng, &mut params[b.w2], hidden[0], hidden[1]);
        glorot(rng, &mut params[b.w3], hidden[1], 1);
        Self {
            input,
            hidden,
            layout,
            params,
        }
    }

    fn build_layout(input: usize, [h1, h2]: [usize; 2]) -> (ParamLayout, Blocks) {
        let mut l = ParamLayout::default();
        let b = Blocks {
            w1: l.push("w1", &[h1, input]),
            b1: l.push("b1", &[h1]),
            w2: l.push("w2", &[h2, h1]),
            b2: l.push("b2", &[h2]),
            w3: l.push("w3", &[1, h2]),
            b3: l.push("b3", &[1]),
        };
        (l, b)
    }

    fn blocks(&self) -> Blocks {
        Self::build_layout(self.input, self.hidden).1
    }

    fn activations(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let b = self.blocks();
        let p = &self.params;
        let mut a1 = vec![0.0; self.hidden[0]];
        affine(&p[b.w1], &p[b.b1], x, &mut a1);
        relu_in_place(&mut a1);
        let mut a2 = vec![0.0; self.hidden[1]];
        affine(&p[b.w2], &p[b.b2], &a1, &mut a2);
        relu_in_place(&mut a2);
        let mut y = [0.0];
        affine(&p[b.w3], &p[b.b3], &a2, &mut y);
        (a1, a2, y[0])
    }
}

impl Network for Mlp {
    fn input_dim(&self) -> usize {
        self.input
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
        self.activations(x).2
    }

    fn forward_backward(
        &self,
        x: &[f64],
        grad: &mut [f64],
        dloss: &mut dyn FnMut(f64) -> f64,
    ) -> f64 {
        let b = self.blocks();
        let p = &self.params;
        let (a1, a2, y) = self.activations(x);
        let dy = dloss(y);
        let [gw1, gb1, gw2, gb2, gw3, gb3] =
            split_blocks(grad, [&b.w1, &b.b1, &b.w2, &b.b2, &b.w3, &b.b3]);

        let mut da2 = vec![0.0; self.hidden[1]];
        affine_backward(&p[b.w3.clone()], &a2, &[dy], gw3, gb3, Some(&mut da2));
        for (d, a) in da2.iter_mut().zip(&a2) {
            if *a <= 0.0 {
                *d = 0.0;
            }
        }
        let mut da1 = vec![0.0; self.hidden[0]];
        affine_backward(&p[b.w2.clone()], &a1, &da2, gw2, gb2, Some(&mut da1));
        for (d, a) in da1.iter_mut().zip(&a1) {
            if *a <= 0.0 {
                *d = 0.0;
            }
        }
        affine_backward(&p[b.w1.clone()], x, &da1, gw1, gb1, None);
        y
    }
}
