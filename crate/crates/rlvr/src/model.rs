//! Two-layer tanh MLP velocity field with hand-written reverse mode.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RlError};

/// Width of the sinusoidal time embedding.
pub const TIME_EMBED: usize = 8;

pub fn time_embedding(t: f64) -> [f64; TIME_EMBED] {
    use std::f64::consts::PI;
    [
        t,
        t * t,
        (PI * t).sin(),
        (PI * t).cos(),
        (2.0 * PI * t).sin(),
        (2.0 * PI * t).cos(),
        (4.0 * PI * t).sin(),
        (4.0 * PI * t).cos(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub latent: usize,
    pub cond: usize,
    pub hidden: usize,
}

impl ModelDims {
    pub fn input(&self) -> usize {
        self.latent + TIME_EMBED + self.cond
    }

    pub fn num_params(&self) -> usize {
        let h = self.hidden;
        h * self.input() + h + self.latent * h + self.latent
    }
}

/// `v = W2 tanh(W1 [x, emb(t), c] + b1) + b2`, parameters stored flat as
/// `W1 | b1 | W2 | b2` (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyVelocityModel {
    pub dims: ModelDims,
    pub params: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    hidden: Vec<f64>,
}

impl ToyVelocityModel {
    pub fn new(dims: ModelDims, rng: &mut impl Rng) -> Self {
        let mut params = vec![0.0; dims.num_params()];
        let (w1, rest) = params.split_at_mut(dims.hidden * dims.input());
        let (_, rest) = rest.split_at_mut(dims.hidden);
        let (w2, _) = rest.split_at_mut(dims.latent * dims.hidden);
        let n1 = Normal::new(0.0, (1.0 / dims.input() as f64).sqrt()).expect("valid std");
        let n2 = Normal::new(0.0, (1.0 / dims.hidden as f64).sqrt()).expect("valid std");
        w1.iter_mut().for_each(|w| *w = n1.sample(rng));
        w2.iter_mut().for_each(|w| *w = n2.sample(rng));
        Self { dims, params }
    }

    pub fn zeros(dims: ModelDims) -> Self {
        Self {
            dims,
            params: vec![0.0; dims.num_params()],
        }
    }

    fn offsets(&self) -> [usize; 4] {
        let d = self.dims;
        let w1 = 0;
        let b1 = w1 + d.hidden * d.input();
        let w2 = b1 + d.hidden;
        let b2 = w2 + d.latent * d.hidden;
        [w1, b1, w2, b2]
    }

    fn assemble(&self, x: &[f64], t: f64, cond: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dims.latent || cond.len() != self.dims.cond {
            return Err(RlError::DimensionMismatch(format!(
                "model expects latent {} / cond {}, got {} / {}",
                self.dims.latent,
                self.dims.cond,
                x.len(),
                cond.len()
            )));
        }
        let mut input = Vec::with_capacity(self.dims.input());
        input.extend_from_slice(x);
        input.extend_from_slice(&time_embedding(t));
        input.extend_from_slice(cond);
        Ok(input)
    }

    pub fn forward(&self, x: &[f64], t: f64, cond: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let input = self.assemble(x, t, cond)?;
        let d = self.dims;
        let [w1, b1, w2, b2] = self.offsets();
        let p = &self.params;
        let n_in = d.input();
        let hidden: Vec<f64> = (0..d.hidden)
            .map(|j| {
                let row = &p[w1 + j * n_in..w1 + (j + 1) * n_in];
                let a: f64 = row.iter().zip(&input).map(|(w, u)| w * u).sum::<f64>() + p[b1 + j];
                a.tanh()
            })
            .collect();
        let out = (0..d.latent)
            .map(|o| {
                let row = &p[w2 + o * d.hidden..w2 + (o + 1) * d.hidden];
                row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + p[b2 + o]
            })
            .collect();
        Ok((out, ForwardCache { input, hidden }))
    }

    pub fn velocity(&self, x: &[f64], t: f64, cond: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x, t, cond)?.0)
    }

    /// Accumulates `d(loss)/d(params)` into `grad` given `d(loss)/d(output)`.
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f64], grad: &mut [f64]) {
        let d = self.dims;
        let [w1, b1, w2, b2] = self.offsets();
        let p = &self.params;
        let n_in = d.input();
        let mut d_hidden = vec![0.0; d.hidden];
        for (o, g) in d_out.iter().enumerate() {
            if *g == 0.0 {
                continue;
            }
            grad[b2 + o] += g;
            let row = w2 + o * d.hidden;
            for (j, h) in cache.hidden.iter().enumerate() {
                grad[row + j] += g * h;
                d_hidden[j] += g * p[row + j];
            }
        }
        for (j, dh) in d_hidden.iter().enumerate() {
            let h = cache.hidden[j];
            let da = dh * (1.0 - h * h);
            if da == 0.0 {
                continue;
            }
            grad[b1 + j] += da;
            let row = w1 + j * n_in;
            for (i, u) in cache.input.iter().enumerate() {
                grad[row + i] += da * u;
            }
        }
    }
}

/// Plain gradient descent with optional momentum, or Adam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Sgd {
        lr: f64,
        momentum: f64,
        #[serde(skip)]
        velocity: Vec<f64>,
    },
    Adam {
        lr: f64,
        #[serde(skip)]
        m: Vec<f64>,
        #[serde(skip)]
        v: Vec<f64>,
        #[serde(skip)]
        t: u64,
    },
}

impl Optimizer {
    pub fn sgd(lr: f64, momentum: f64) -> Self {
        Optimizer::Sgd {
            lr,
            momentum,
            velocity: Vec::new(),
        }
    }

    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self {
            Optimizer::Sgd {
                lr,
                momentum,
                velocity,
            } => {
                velocity.resize(params.len(), 0.0);
                for ((p, g), u) in params.iter_mut().zip(grad).zip(velocity.iter_mut()) {
                    *u = *momentum * *u + g;
                    *p -= *lr * *u;
                }
            }
            Optimizer::Adam { lr, m, v, t } => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                m.resize(params.len(), 0.0);
                v.resize(params.len(), 0.0);
                *t += 1;
                let c1 = 1.0 - B1.powi(*t as i32);
                let c2 = 1.0 - B2.powi(*t as i32);
                for i in 0..params.len() {
                    m[i] = B1 * m[i] + (1.0 - B1) * grad[i];
                    v[i] = B2 * v[i] + (1.0 - B2) * grad[i] * grad[i];
                    params[i] -= *lr * (m[i] / c1) / ((v[i] / c2).sqrt() + 1e-8);
                }
            }
        }
    }
}

/// Rescales `grad` in place so its L2 norm is at most `max_norm`.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use verigrid::SeededRng;

    #[test]
    fn forward_is_deterministic() {
        let dims = ModelDims {
            latent: 4,
            cond: 3,
            hidden: 5,
        };
        let m = ToyVelocityModel::new(dims, &mut SeededRng::new(1));
        let a = m.velocity(&[0.1, 0.2, 0.3, 0.4], 0.5, &[1.0, 0.0, -1.0]).unwrap();
        let b = m.velocity(&[0.1, 0.2, 0.3, 0.4], 0.5, &[1.0, 0.0, -1.0]).unwrap();
        assert_eq!(a, b);
        assert!(m.velocity(&[0.1], 0.5, &[1.0, 0.0, -1.0]).is_err());
    }

    #[test]
    fn sgd_step_moves_against_gradient() {
        let mut p = vec![1.0, -1.0];
        let mut opt = Optimizer::sgd(0.5, 0.0);
        opt.step(&mut p, &[2.0, -2.0]);
        assert_eq!(p, vec![0.0, 0.0]);
    }
}
