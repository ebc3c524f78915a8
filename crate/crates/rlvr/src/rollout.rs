//! Group sampling with noise on the early steps only.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use verigrid::grid::Action;
use verigrid::rewards::{RewardBreakdown, RewardMode};
use verigrid::SeededRng;

use crate::error::{Result, RlError};
use crate::grpo::{gaussian_step, transition_mean};
use crate::latent::{decode_latent, scalar, score_actions, LatentCondition};
use crate::model::ToyVelocityModel;
use crate::schedule::DenoiseSchedule;

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub x: Vec<f64>,
    pub mu_old: Vec<f64>,
    pub x_next: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutRecord {
    pub group: u64,
    pub sample: usize,
    /// One entry per denoising step `k = 1..=K`.
    pub steps: Vec<StepRecord>,
    pub actions: Vec<Action>,
    pub reward: RewardBreakdown,
    /// The scalar the optimiser sees under the configured reward mode.
    pub scalar: f64,
}

impl RolloutRecord {
    pub fn final_latent(&self) -> &[f64] {
        &self.steps.last().expect("at least one step").x_next
    }
}

pub fn standard_normal(n: usize, rng: &mut SeededRng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Integrates from `x` at `t = 1` down to `t = 0`, recording every step.
pub fn sample_latent(
    model: &ToyVelocityModel,
    cond: &LatentCondition,
    schedule: &DenoiseSchedule,
    x1: Vec<f64>,
    rng: &mut SeededRng,
) -> Result<Vec<StepRecord>> {
    let mut x = x1;
    let mut steps = Vec::with_capacity(schedule.steps);
    for k in 1..=schedule.steps {
        let (t, t_next, sigma) = (schedule.t(k), schedule.t(k + 1), schedule.sigma(k));
        let v = model.velocity(&x, t, &cond.features)?;
        let (mu, next) = if sigma > 0.0 {
            let noise = standard_normal(x.len(), rng);
            (
                transition_mean(&x, &v, t, t_next),
                gaussian_step(&x, &v, t, t_next, sigma, &noise),
            )
        } else {
            let mu = transition_mean(&x, &v, t, t_next);
            (mu.clone(), mu)
        };
        steps.push(StepRecord {
            x: std::mem::replace(&mut x, next.clone()),
            mu_old: mu,
            x_next: next,
        });
    }
    Ok(steps)
}

/// `G` samples for one condition. All samples start from the same initial
/// noise (drawn from `seed`); each then gets its own noise stream, so the
/// result does not depend on thread scheduling.
pub fn rollout_group(
    model: &ToyVelocityModel,
    cond: &LatentCondition,
    schedule: &DenoiseSchedule,
    group_size: usize,
    seed: u64,
    mode: RewardMode,
) -> Result<Vec<RolloutRecord>> {
    if group_size < 2 {
        return Err(RlError::GroupTooSmall(group_size));
    }
    let root = SeededRng::new(seed);
    let x1 = standard_normal(cond.latent_dim(), &mut root.child("initial-noise"));
    (0..group_size)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.child_indexed("sample", i as u64);
            let steps = sample_latent(model, cond, schedule, x1.clone(), &mut rng)?;
            let actions = decode_latent(&steps.last().expect("K >= 1").x_next, &cond.instance);
            let (_, reward) = score_actions(&cond.instance, &actions)?;
            Ok(RolloutRecord {
                group: seed,
                sample: i,
                steps,
                scalar: scalar(&reward, mode),
                actions,
                reward,
            })
        })
        .collect()
}
