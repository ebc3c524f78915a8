mod common;

use verigrid::rewards::RewardMode;
use verigrid::{SeededRng, TaskKind};
use verigrid_rl::fit::{draw_samples, flow_matching_fit, flow_matching_loss, FitConfig};
use verigrid_rl::latent::decode_latent;
use verigrid_rl::rollout::{rollout_group, sample_latent, standard_normal};
use verigrid_rl::train::{build_pool, model_dims, TrainConfig};
use verigrid_rl::{DenoiseSchedule, ToyVelocityModel};

#[test]
fn fitted_policy_reproduces_the_solution() {
    let cond = common::condition(TaskKind::Maze, 21, 16);
    let mut model = common::model(&cond, 128, 1);
    let cfg = FitConfig {
        steps: 1500,
        lr: 3e-3,
        batch: 32,
        seed: 4,
    };
    let report = flow_matching_fit(&mut model, std::slice::from_ref(&cond), &cfg).unwrap();
    assert!(report.losses.last().unwrap() < &report.losses[0]);
    let ode = DenoiseSchedule::new(20, 0, 0.0).unwrap();
    let hits = (0..10u64)
        .filter(|s| {
            let mut rng = SeededRng::new(*s);
            let x1 = standard_normal(cond.latent_dim(), &mut rng);
            let steps = sample_latent(&model, &cond, &ode, x1, &mut rng).unwrap();
            decode_latent(&steps.last().unwrap().x_next, &cond.instance) == cond.instance.gt_actions
        })
        .count();
    assert!(hits >= 9, "{hits}/10");
}

#[test]
fn zero_steps_leaves_policy_alone() {
    let cond = common::condition(TaskKind::Sokoban, 2, 16);
    let mut model = common::model(&cond, 16, 1);
    let before = model.clone();
    let cfg = FitConfig {
        steps: 0,
        ..FitConfig::default()
    };
    assert!(flow_matching_fit(&mut model, std::slice::from_ref(&cond), &cfg)
        .unwrap()
        .losses
        .is_empty());
    assert_eq!(model, before);
}

#[test]
fn zero_learning_rate_keeps_loss_constant() {
    let cond = common::condition(TaskKind::FlowFree, 2, 24);
    let mut model = common::model(&cond, 16, 1);
    let data = std::slice::from_ref(&cond);
    let targets = vec![cond.target().unwrap()];
    let probe = draw_samples(&targets, 16, &mut SeededRng::new(9));
    let before = flow_matching_loss(&model, data, &targets, &probe, None).unwrap();
    let cfg = FitConfig {
        steps: 20,
        lr: 0.0,
        batch: 8,
        seed: 1,
    };
    flow_matching_fit(&mut model, data, &cfg).unwrap();
    assert_eq!(
        flow_matching_loss(&model, data, &targets, &probe, None).unwrap(),
        before
    );
}

#[test]
fn fitted_pool_policy_leaves_group_spread() {
    let cfg = TrainConfig::default();
    let pool = build_pool(&cfg).unwrap();
    let mut model = ToyVelocityModel::new(model_dims(&pool, cfg.hidden), &mut SeededRng::new(cfg.seed));
    flow_matching_fit(&mut model, &pool, &cfg.fit_config()).unwrap();
    let schedule = cfg.schedule().unwrap();
    for (i, cond) in pool.iter().enumerate() {
        let group = rollout_group(
            &model,
            cond,
            &schedule,
            cfg.group_size,
            i as u64,
            RewardMode::Dense,
        )
        .unwrap();
        let r: Vec<f64> = group.iter().map(|g| g.reward.combined).collect();
        assert!(r.iter().any(|x| *x != r[0]), "instance {i}: {r:?}");
    }
}
