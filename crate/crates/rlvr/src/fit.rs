//! Supervised flow-matching fit of the velocity field to ground-truth
//! latents.

use rand::Rng;
use serde::{Deserialize, Serialize};
use verigrid::SeededRng;

use crate::error::{Result, RlError};
use crate::latent::LatentCondition;
use crate::model::{Optimizer, ToyVelocityModel};
use crate::rollout::standard_normal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub steps: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            lr: 3e-3,
            batch: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Mini-batch loss before each update.
    pub losses: Vec<f64>,
}

/// One training point: `x_t = (1 - t) z + t eps`, target `eps - z`.
#[derive(Debug, Clone)]
pub struct FlowSample {
    pub condition: usize,
    pub t: f64,
    pub noise: Vec<f64>,
}

pub fn draw_samples(targets: &[Vec<f64>], batch: usize, rng: &mut SeededRng) -> Vec<FlowSample> {
    (0..batch)
        .map(|_| {
            let condition = rng.random_range(0..targets.len());
            FlowSample {
                condition,
                t: rng.random::<f64>(),
                noise: standard_normal(targets[condition].len(), rng),
            }
        })
        .collect()
}

/// Mean over the batch of `|v - (eps - z)|^2 / D`, with its gradient added
/// into `grad` when given.
pub fn flow_matching_loss(
    model: &ToyVelocityModel,
    data: &[LatentCondition],
    targets: &[Vec<f64>],
    batch: &[FlowSample],
    mut grad: Option<&mut [f64]>,
) -> Result<f64> {
    let mut total = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for s in batch {
        let z = &targets[s.condition];
        let d = z.len() as f64;
        let x: Vec<f64> = z
            .iter()
            .zip(&s.noise)
            .map(|(z, e)| (1.0 - s.t) * z + s.t * e)
            .collect();
        let (v, cache) = model.forward(&x, s.t, &data[s.condition].features)?;
        let diff: Vec<f64> = v
            .iter()
            .zip(z.iter().zip(&s.noise))
            .map(|(v, (z, e))| v - (e - z))
            .collect();
        total += scale * diff.iter().map(|r| r * r).sum::<f64>() / d;
        if let Some(g) = grad.as_deref_mut() {
            let d_out: Vec<f64> = diff.iter().map(|r| 2.0 * r * scale / d).collect();
            model.backward(&cache, &d_out, g);
        }
    }
    Ok(total)
}

pub fn flow_matching_fit(
    model: &mut ToyVelocityModel,
    data: &[LatentCondition],
    cfg: &FitConfig,
) -> Result<FitReport> {
    if data.is_empty() && cfg.steps > 0 {
        return Err(RlError::InvalidConfig("nothing to fit".into()));
    }
    let targets = data.iter().map(|c| c.target()).collect::<Result<Vec<_>>>()?;
    let mut rng = SeededRng::new(cfg.seed).child("flow-matching");
    let mut opt = Optimizer::adam(cfg.lr);
    let mut losses = Vec::with_capacity(cfg.steps);
    let mut grad = vec![0.0; model.params.len()];
    for step in 0..cfg.steps {
        let batch = draw_samples(&targets, cfg.batch.max(1), &mut rng);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let loss = flow_matching_loss(model, data, &targets, &batch, Some(&mut grad))?;
        if !loss.is_finite() {
            return Err(RlError::DivergedLoss { step, loss });
        }
        losses.push(loss);
        opt.step(&mut model.params, &grad);
    }
    Ok(FitReport { losses })
}
