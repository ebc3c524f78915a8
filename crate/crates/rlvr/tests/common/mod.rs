#![allow(dead_code)]

use verigrid::domain::{domain, GenOptions};
use verigrid::render::MIN_CELL_PX;
use verigrid::{SeededRng, TaskKind};
use verigrid_rl::latent::LatentCondition;
use verigrid_rl::{ModelDims, ToyVelocityModel};

pub fn condition(task: TaskKind, seed: u64, slots: usize) -> LatentCondition {
    let opts = GenOptions {
        size: Some(if task == TaskKind::Sokoban {
            6
        } else if task == TaskKind::FlowFree {
            5
        } else {
            7
        }),
        cell_px: MIN_CELL_PX,
        ..GenOptions::default()
    };
    let dom = domain(task);
    let inst = dom
        .generate(format!("{}-{seed}", task.name()), seed, &opts)
        .unwrap();
    let dim = dom.condition_features(&inst).len();
    LatentCondition::new(inst, slots, dim)
}

pub fn model(cond: &LatentCondition, hidden: usize, seed: u64) -> ToyVelocityModel {
    let dims = ModelDims {
        latent: cond.latent_dim(),
        cond: cond.features.len(),
        hidden,
    };
    ToyVelocityModel::new(dims, &mut SeededRng::new(seed))
}

/// Nudges every parameter by a small Gaussian amount.
pub fn perturb(model: &ToyVelocityModel, scale: f64, seed: u64) -> ToyVelocityModel {
    let mut out = model.clone();
    let noise = verigrid_rl::rollout::standard_normal(out.params.len(), &mut SeededRng::new(seed));
    out.params
        .iter_mut()
        .zip(noise)
        .for_each(|(p, e)| *p += scale * e);
    out
}
