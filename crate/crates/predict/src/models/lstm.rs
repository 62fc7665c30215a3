use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{affine, affine_backward, glorot, split_blocks, Network, ParamLayout};

/// Single LSTM cell run over the lag window, one lag per step, with the
/// latent rows appended to every step's input. A linear readout of the last
/// hidden state gives the forecast.
///
/// Gate pre-activations are stacked `[input, forget, cell, output]`, each of
/// `hidden` rows, and act on `[x_t, h_{t−1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    latent_dim: usize,
    window: usize,
    hidden: usize,
    layout: ParamLayout,
    params: Vec<f64>,
}

struct Blocks {
    w: Range<usize>,
    b: Range<usize>,
    wo: Range<usize>,
    bo: Range<usize>,
}

/// Per-step state kept for backpropagation through time.
struct StepCache {
    input: Vec<f64>,
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    c: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Lstm {
    pub fn new<R: Rng>(latent_dim: usize, window: usize, hidden: usize, rng: &mut R) -> Self {
        let mut net = Self {
            latent_dim,
            window,
            hidden,
            layout: ParamLayout::default(),
            params: Vec::new(),
        };
        let (layout, b) = net.build_layout();
        let mut params = vec![0.0; layout.len()];
        let step_dim = net.step_dim();
        glorot(rng, &mut params[b.w.clone()], step_dim + hidden, 4 * hidden);
        // Forget gate starts open.
        params[b.b.start + hidden..b.b.start + 2 * hidden]
            .iter_mut()
            .for_each(|v| *v = 1.0);
        glorot(rng, &mut params[b.wo], hidden, 1);
        net.layout = layout;
        net.params = params;
        net
    }

    fn step_dim(&self) -> usize {
        1 + self.latent_dim
    }

    fn build_layout(&self) -> (ParamLayout, Blocks) {
        let mut l = ParamLayout::default();
        let h = self.hidden;
        let b = Blocks {
            w: l.push("gates_w", &[4 * h, self.step_dim() + h]),
            b: l.push("gates_b", &[4 * h]),
            wo: l.push("readout_w", &[1, h]),
            bo: l.push("readout_b", &[1]),
        };
        (l, b)
    }

    fn run(&self, x: &[f64], b: &Blocks, mut cache: Option<&mut Vec<StepCache>>) -> (Vec<f64>, f64) {
        let h_dim = self.hidden;
        let w = &self.params[b.w.clone()];
        let bias = &self.params[b.b.clone()];
        let latent = &x[..self.latent_dim];
        let mut h = vec![0.0; h_dim];
        let mut c = vec![0.0; h_dim];
        for t in 0..self.window {
            let mut input = Vec::with_capacity(self.step_dim() + h_dim);
            input.push(x[self.latent_dim + t]);
            input.extend_from_slice(latent);
            input.extend_from_slice(&h);
            let mut gates = vec![0.0; 4 * h_dim];
            affine(w, bias, &input, &mut gates);
            for (n, g) in gates.iter_mut().enumerate() {
                *g = if n / h_dim == 2 { g.tanh() } else { sigmoid(*g) };
            }
            let c_prev = c.clone();
            for u in 0..h_dim {
                let (i, f, g, o) = (
                    gates[u],
                    gates[h_dim + u],
                    gates[2 * h_dim + u],
                    gates[3 * h_dim + u],
                );
                c[u] = f * c_prev[u] + i * g;
                h[u] = o * c[u].tanh();
            }
            if let Some(cache) = cache.as_deref_mut() {
                cache.push(StepCache {
                    input,
                    gates,
                    c_prev,
                    c: c.clone(),
                });
            }
        }
        let mut y = [0.0];
        affine(&self.params[b.wo.clone()], &self.params[b.bo.clone()], &h, &mut y);
        (h, y[0])
    }
}

impl Network for Lstm {
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
        self.run(x, &b, None).1
    }

    fn forward_backward(
        &self,
        x: &[f64],
        grad: &mut [f64],
        dloss: &mut dyn FnMut(f64) -> f64,
    ) -> f64 {
        let (_, b) = self.build_layout();
        let mut cache = Vec::with_capacity(self.window);
        let (h_last, y) = self.run(x, &b, Some(&mut cache));
        let dy = dloss(y);
        let h_dim = self.hidden;
        let w = &self.params[b.w.clone()];
        let [gw, gb, gwo, gbo] = split_blocks(grad, [&b.w, &b.b, &b.wo, &b.bo]);

        let mut dh = vec![0.0; h_dim];
        affine_backward(&self.params[b.wo.clone()], &h_last, &[dy], gwo, gbo, Some(&mut dh));
        let mut dc = vec![0.0; h_dim];
        let mut dz = vec![0.0; 4 * h_dim];
        let mut dinput = vec![0.0; self.step_dim() + h_dim];
        for step in cache.iter().rev() {
            let g = &step.gates;
            for u in 0..h_dim {
                let (i, f, cg, o) = (g[u], g[h_dim + u], g[2 * h_dim + u], g[3 * h_dim + u]);
                let tc = step.c[u].tanh();
                let d_o = dh[u] * tc;
                dc[u] += dh[u] * o * (1.0 - tc * tc);
                let d_i = dc[u] * cg;
                let d_g = dc[u] * i;
                let d_f = dc[u] * step.c_prev[u];
                dz[u] = d_i * i * (1.0 - i);
                dz[h_dim + u] = d_f * f * (1.0 - f);
                dz[2 * h_dim + u] = d_g * (1.0 - cg * cg);
                dz[3 * h_dim + u] = d_o * o * (1.0 - o);
                dc[u] *= f;
            }
            affine_backward(w, &step.input, &dz, gw, gb, Some(&mut dinput));
            dh.copy_from_slice(&dinput[self.step_dim()..]);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::gradcheck::max_rel_error;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gradient_matches_finite_differences_two_steps_three_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Lstm::new(2, 2, 3, &mut rng);
        let batch: Vec<(Vec<f64>, f64)> = (0..3)
            .map(|_| ((0..4).map(|_| rng.random_range(-1.0..1.0)).collect(), rng.random_range(-1.0..1.0)))
            .collect();
        let err = max_rel_error(&mut net, &batch, 1e-6, 1e-6);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Lstm::new(4, 3, 32, &mut rng);
        let b = &net.layout().blocks[1];
        assert_eq!(b.dims, vec![128]);
        let forget = &net.params()[b.offset + 32..b.offset + 64];
        assert!(forget.iter().all(|&v| v == 1.0));
    }
}
