//! The group-relative training loop and the toy end-to-end run.

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use verigrid::domain::{domain, GenOptions};
use verigrid::render::MIN_CELL_PX;
use verigrid::rewards::RewardMode;
use verigrid::{SeededRng, TaskKind};

use crate::error::{Result, RlError};
use crate::fit::{flow_matching_fit, FitConfig, FitReport};
use crate::grpo::{
    clipped_term, clipped_term_grad, group_advantages, kl_penalty, log_ratio, transition_mean,
};
use crate::latent::{LatentCondition, DEFAULT_SLOTS};
use crate::model::{clip_grad_norm, ModelDims, Optimizer, ToyVelocityModel};
use crate::rollout::{rollout_group, RolloutRecord};
use crate::schedule::{
    DenoiseSchedule, DEFAULT_BETA, DEFAULT_CLIP, DEFAULT_CUTOFF, DEFAULT_ETA, DEFAULT_STEPS,
};

/// Training configuration, read from and written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(rename = "K")]
    pub steps: usize,
    #[serde(rename = "L")]
    pub early_cutoff: usize,
    #[serde(rename = "G")]
    pub group_size: usize,
    pub eta: f64,
    pub eps: f64,
    pub beta: f64,
    pub lr: f64,
    pub iters: usize,
    pub reward_mode: RewardMode,
    pub tasks: Vec<TaskKind>,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub momentum: f64,
    pub grad_clip: Option<f64>,
    /// Optimiser updates per sampled group; above 1 the clipping matters.
    pub updates_per_iter: usize,
    pub groups_per_iter: usize,
    pub hidden: usize,
    pub slots: usize,
    pub pool_size: usize,
    pub board_size: Option<usize>,
    pub colors: Option<usize>,
    pub fit_steps: usize,
    pub fit_lr: f64,
    pub fit_batch: usize,
    /// Groups per pool instance when measuring mean reward.
    pub eval_groups: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            early_cutoff: DEFAULT_CUTOFF,
            group_size: 16,
            eta: DEFAULT_ETA,
            eps: DEFAULT_CLIP,
            beta: DEFAULT_BETA,
            lr: 0.5,
            iters: 300,
            reward_mode: RewardMode::Dense,
            tasks: vec![TaskKind::Maze],
            seed: 0,
            optimizer: OptimizerKind::Sgd,
            momentum: 0.9,
            grad_clip: Some(1.0),
            updates_per_iter: 2,
            groups_per_iter: 4,
            hidden: 64,
            slots: DEFAULT_SLOTS,
            pool_size: 4,
            board_size: Some(7),
            colors: None,
            fit_steps: 150,
            fit_lr: 3e-3,
            fit_batch: 32,
            eval_groups: 4,
        }
    }
}

impl TrainConfig {
    pub fn schedule(&self) -> Result<DenoiseSchedule> {
        let s = DenoiseSchedule::new(self.steps, self.early_cutoff, self.eta)?
            .with_clip(self.eps)
            .with_beta(self.beta);
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule()?;
        if self.group_size < 2 {
            return Err(RlError::GroupTooSmall(self.group_size));
        }
        if self.tasks.is_empty() || self.pool_size == 0 {
            return Err(RlError::InvalidConfig("empty training pool".into()));
        }
        if self.updates_per_iter == 0 || self.groups_per_iter == 0 || self.slots == 0 || self.hidden == 0 {
            return Err(RlError::InvalidConfig("counts must be positive".into()));
        }
        if !(self.lr >= 0.0 && self.fit_lr >= 0.0) {
            return Err(RlError::InvalidConfig("learning rates must be >= 0".into()));
        }
        Ok(())
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            steps: self.fit_steps,
            lr: self.fit_lr,
            batch: self.fit_batch,
            seed: SeededRng::new(self.seed).child_seed("fit"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// One JSONL row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterMetrics {
    pub iter: usize,
    pub mean_reward: f64,
    pub loss: f64,
    pub kl: f64,
    pub wall_ms: f64,
}

/// Fixed pool of small instances, rendered at the minimum cell size.
pub fn build_pool(cfg: &TrainConfig) -> Result<Vec<LatentCondition>> {
    let opts = GenOptions {
        size: cfg.board_size,
        colors: cfg.colors,
        cell_px: MIN_CELL_PX,
        ..GenOptions::default()
    };
    let root = SeededRng::new(cfg.seed).child("pool");
    let mut instances = Vec::new();
    for task in &cfg.tasks {
        for i in 0..cfg.pool_size {
            let seed = root.child_indexed(task.name(), i as u64).seed();
            instances.push(domain(*task).generate(format!("{}-{i}", task.name()), seed, &opts)?);
        }
    }
    let cond_dim = instances
        .iter()
        .map(|inst| domain(inst.task()).condition_features(inst).len())
        .max()
        .unwrap_or(0);
    Ok(instances
        .into_iter()
        .map(|inst| LatentCondition::new(inst, cfg.slots, cond_dim))
        .collect())
}

pub fn model_dims(pool: &[LatentCondition], hidden: usize) -> ModelDims {
    ModelDims {
        latent: pool[0].latent_dim(),
        cond: pool[0].features.len(),
        hidden,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub loss: f64,
    pub policy: f64,
    pub kl: f64,
    pub grad: Vec<f64>,
}

/// Clipped surrogate plus `beta` times the KL to `reference`, averaged over
/// every sample and every step `k <= cutoff`, with its gradient.
///
/// The new means are recomputed from the recorded states under the current
/// parameters; the old means stay as recorded.
pub fn objective(
    model: &ToyVelocityModel,
    reference: &ToyVelocityModel,
    cond: &LatentCondition,
    group: &[RolloutRecord],
    advantages: &[f64],
    schedule: &DenoiseSchedule,
    cutoff: usize,
) -> Result<ObjectiveValue> {
    if group.len() != advantages.len() {
        return Err(RlError::DimensionMismatch("one advantage per sample".into()));
    }
    let n = (group.len() * cutoff) as f64;
    let beta = schedule.kl_beta;
    let eps = schedule.clip_eps;
    let per_sample = group
        .par_iter()
        .zip(advantages)
        .map(|(rec, &adv)| {
            let mut grad = vec![0.0; model.params.len()];
            let (mut policy, mut kl) = (0.0, 0.0);
            for k in 1..=cutoff {
                let step = &rec.steps[k - 1];
                let (t, t_next, sigma) = (schedule.t(k), schedule.t(k + 1), schedule.sigma(k));
                if sigma == 0.0 {
                    return Err(RlError::ZeroSigma { step: k });
                }
                let (v, cache) = model.forward(&step.x, t, &cond.features)?;
                let mu_new = transition_mean(&step.x, &v, t, t_next);
                let mu_ref = transition_mean(
                    &step.x,
                    &reference.velocity(&step.x, t, &cond.features)?,
                    t,
                    t_next,
                );
                let r = log_ratio(&step.x_next, &mu_new, &step.mu_old, sigma)?;
                policy += clipped_term(r, adv, eps)?;
                kl += kl_penalty(&mu_new, &mu_ref, sigma)?;
                let d_r = clipped_term_grad(r, adv, eps)?;
                let inv = 1.0 / (sigma * sigma * step.x.len() as f64);
                let dt = t_next - t;
                let d_v: Vec<f64> = (0..v.len())
                    .map(|j| {
                        let d_mu =
                            d_r * (step.x_next[j] - mu_new[j]) * inv + beta * (mu_new[j] - mu_ref[j]) * inv;
                        dt * d_mu / n
                    })
                    .collect();
                model.backward(&cache, &d_v, &mut grad);
            }
            Ok((policy, kl, grad))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut grad = vec![0.0; model.params.len()];
    let (mut policy, mut kl) = (0.0, 0.0);
    for (p, k, g) in per_sample {
        policy += p;
        kl += k;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    let (policy, kl) = if n > 0.0 { (policy / n, kl / n) } else { (0.0, 0.0) };
    Ok(ObjectiveValue {
        loss: policy + beta * kl,
        policy,
        kl,
        grad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mean_reward: f64,
    pub success_rate: f64,
}

/// Dense reward and success over `groups` sampled groups per instance. Uses
/// its own seed, so two models evaluated with the same seed see the same
/// noise.
pub fn evaluate(
    model: &ToyVelocityModel,
    pool: &[LatentCondition],
    schedule: &DenoiseSchedule,
    group_size: usize,
    groups: usize,
    seed: u64,
) -> Result<EvalReport> {
    let root = SeededRng::new(seed).child("eval");
    let (mut reward, mut success, mut n) = (0.0, 0.0, 0.0);
    for (c, cond) in pool.iter().enumerate() {
        for g in 0..groups {
            let s = root.child_indexed("group", (c * groups + g) as u64).seed();
            for rec in rollout_group(model, cond, schedule, group_size, s, RewardMode::Dense)? {
                reward += rec.reward.combined;
                success += if rec.reward.success { 1.0 } else { 0.0 };
                n += 1.0;
            }
        }
    }
    Ok(EvalReport {
        mean_reward: reward / n,
        success_rate: success / n,
    })
}

/// Runs `cfg.iters` iterations of sampling, advantage normalisation and
/// gradient updates, writing one JSON line per iteration to `log`.
pub fn grpo_train(
    model: &mut ToyVelocityModel,
    reference: &ToyVelocityModel,
    pool: &[LatentCondition],
    cfg: &TrainConfig,
    mut log: Option<&mut dyn Write>,
) -> Result<Vec<IterMetrics>> {
    cfg.validate()?;
    let schedule = cfg.schedule()?;
    let root = SeededRng::new(cfg.seed).child("grpo");
    let mut opt = match cfg.optimizer {
        OptimizerKind::Sgd => Optimizer::sgd(cfg.lr, cfg.momentum),
        OptimizerKind::Adam => Optimizer::adam(cfg.lr),
    };
    let mut curve = Vec::with_capacity(cfg.iters);
    for iter in 0..cfg.iters {
        let started = Instant::now();
        let mut pick = root.child_indexed("pick", iter as u64);
        let mut groups = Vec::with_capacity(cfg.groups_per_iter);
        for g in 0..cfg.groups_per_iter {
            let cond = &pool[pick.random_range(0..pool.len())];
            let seed = root
                .child_indexed("group", (iter * cfg.groups_per_iter + g) as u64)
                .seed();
            let records = rollout_group(model, cond, &schedule, cfg.group_size, seed, cfg.reward_mode)?;
            let rewards: Vec<f64> = records.iter().map(|r| r.scalar).collect();
            let adv = group_advantages(&rewards)?;
            groups.push((cond, records, adv));
        }
        let mean_reward = groups
            .iter()
            .flat_map(|(_, recs, _)| recs.iter().map(|r| r.scalar))
            .sum::<f64>()
            / (groups.len() * cfg.group_size) as f64;
        let (mut loss, mut kl) = (0.0, 0.0);
        for update in 0..cfg.updates_per_iter {
            let mut grad = vec![0.0; model.params.len()];
            let (mut l, mut k) = (0.0, 0.0);
            for (cond, records, adv) in &groups {
                let obj = objective(
                    model,
                    reference,
                    cond,
                    records,
                    adv,
                    &schedule,
                    schedule.early_cutoff,
                )?;
                l += obj.loss / groups.len() as f64;
                k += obj.kl / groups.len() as f64;
                let w = 1.0 / groups.len() as f64;
                grad.iter_mut().zip(&obj.grad).for_each(|(a, b)| *a += w * b);
            }
            if !l.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(RlError::DivergedLoss { step: iter, loss: l });
            }
            if update == 0 {
                loss = l;
                kl = k;
            }
            if let Some(max) = cfg.grad_clip {
                clip_grad_norm(&mut grad, max);
            }
            opt.step(&mut model.params, &grad);
        }
        let m = IterMetrics {
            iter,
            mean_reward,
            loss,
            kl,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        if let Some(w) = log.as_deref_mut() {
            writeln!(w, "{}", serde_json::to_string(&m)?)?;
        }
        log::debug!("iter {iter}: reward {mean_reward:.4} loss {loss:.6} kl {kl:.6}");
        curve.push(m);
    }
    Ok(curve)
}

#[derive(Debug, Clone)]
pub struct ToyRun {
    pub fitted: ToyVelocityModel,
    pub trained: ToyVelocityModel,
    pub fit: FitReport,
    pub baseline: EvalReport,
    pub final_eval: EvalReport,
    pub curve: Vec<IterMetrics>,
}

/// Flow-matching fit, then group-relative training from the fitted policy,
/// which also serves as the KL reference.
pub fn run_toy(cfg: &TrainConfig, log: Option<&mut dyn Write>) -> Result<ToyRun> {
    cfg.validate()?;
    let pool = build_pool(cfg)?;
    let dims = model_dims(&pool, cfg.hidden);
    let mut model = ToyVelocityModel::new(dims, &mut SeededRng::new(cfg.seed).child("init"));
    let fit = flow_matching_fit(&mut model, &pool, &cfg.fit_config())?;
    let fitted = model.clone();
    let schedule = cfg.schedule()?;
    let eval_seed = SeededRng::new(cfg.seed).child_seed("eval");
    let baseline = evaluate(
        &fitted,
        &pool,
        &schedule,
        cfg.group_size,
        cfg.eval_groups,
        eval_seed,
    )?;
    let curve = grpo_train(&mut model, &fitted, &pool, cfg, log)?;
    let final_eval = evaluate(
        &model,
        &pool,
        &schedule,
        cfg.group_size,
        cfg.eval_groups,
        eval_seed,
    )?;
    Ok(ToyRun {
        fitted,
        trained: model,
        fit,
        baseline,
        final_eval,
        curve,
    })
}
