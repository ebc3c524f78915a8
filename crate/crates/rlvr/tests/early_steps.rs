mod common;

use verigrid::rewards::RewardMode;
use verigrid::TaskKind;
use verigrid_rl::grpo::{clipped_term, kl_penalty, log_ratio, transition_mean};
use verigrid_rl::latent::LatentCondition;
use verigrid_rl::rollout::{rollout_group, RolloutRecord};
use verigrid_rl::train::objective;
use verigrid_rl::{DenoiseSchedule, ToyVelocityModel};

/// The objective summed term by term from the primitives over steps
/// `1..=upto`, averaged over those terms only.
fn manual(
    model: &ToyVelocityModel,
    reference: &ToyVelocityModel,
    cond: &LatentCondition,
    group: &[RolloutRecord],
    adv: &[f64],
    schedule: &DenoiseSchedule,
    upto: usize,
) -> f64 {
    let (mut policy, mut kl, mut n) = (0.0, 0.0, 0.0);
    for (rec, a) in group.iter().zip(adv) {
        for k in 1..=upto {
            let s = &rec.steps[k - 1];
            let (t, next, sigma) = (schedule.t(k), schedule.t(k + 1), schedule.sigma(k));
            let mu_new = transition_mean(&s.x, &model.velocity(&s.x, t, &cond.features).unwrap(), t, next);
            let mu_ref = transition_mean(
                &s.x,
                &reference.velocity(&s.x, t, &cond.features).unwrap(),
                t,
                next,
            );
            policy += clipped_term(
                log_ratio(&s.x_next, &mu_new, &s.mu_old, sigma).unwrap(),
                *a,
                schedule.clip_eps,
            )
            .unwrap();
            kl += kl_penalty(&mu_new, &mu_ref, sigma).unwrap();
            n += 1.0;
        }
    }
    policy / n + schedule.kl_beta * kl / n
}

fn setup() -> (
    LatentCondition,
    ToyVelocityModel,
    ToyVelocityModel,
    ToyVelocityModel,
) {
    let cond = common::condition(TaskKind::Maze, 2, 16);
    let old = common::model(&cond, 24, 3);
    let current = common::perturb(&old, 0.01, 4);
    let reference = common::perturb(&old, 0.01, 5);
    (cond, old, current, reference)
}

#[test]
fn full_cutoff_equals_full_sum() {
    let (cond, old, current, reference) = setup();
    let schedule = DenoiseSchedule::new(20, 20, 0.7).unwrap();
    let group = rollout_group(&old, &cond, &schedule, 6, 11, RewardMode::Dense).unwrap();
    let adv = [1.2, -0.4, 0.3, -1.5, 0.9, -0.5];
    let got = objective(&current, &reference, &cond, &group, &adv, &schedule, 20)
        .unwrap()
        .loss;
    let want = manual(&current, &reference, &cond, &group, &adv, &schedule, 20);
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
}

#[test]
fn early_cutoff_drops_late_terms() {
    let (cond, old, current, reference) = setup();
    let schedule = DenoiseSchedule::new(20, 20, 0.7).unwrap();
    let group = rollout_group(&old, &cond, &schedule, 6, 12, RewardMode::Dense).unwrap();
    let adv = [0.2, -1.4, 1.3, -0.5, 0.9, -0.5];
    for cutoff in [1, 5, 10, 19] {
        let got = objective(&current, &reference, &cond, &group, &adv, &schedule, cutoff)
            .unwrap()
            .loss;
        let want = manual(&current, &reference, &cond, &group, &adv, &schedule, cutoff);
        assert!((got - want).abs() < 1e-12, "L={cutoff}: {got} vs {want}");
    }
}

#[test]
fn deterministic_tail_after_cutoff() {
    let (cond, old, _, _) = setup();
    let schedule = DenoiseSchedule::new(20, 10, 0.7).unwrap();
    assert!(schedule.sigmas[..10].iter().all(|s| *s > 0.0));
    for rec in rollout_group(&old, &cond, &schedule, 4, 13, RewardMode::Dense).unwrap() {
        for (k, s) in rec.steps.iter().enumerate() {
            if k >= 10 {
                assert_eq!(s.x_next, s.mu_old);
            } else {
                assert_ne!(s.x_next, s.mu_old);
            }
        }
    }
}

#[test]
fn objective_rejects_deterministic_steps() {
    let (cond, old, current, reference) = setup();
    let schedule = DenoiseSchedule::new(20, 10, 0.7).unwrap();
    let group = rollout_group(&old, &cond, &schedule, 2, 14, RewardMode::Dense).unwrap();
    let err = objective(&current, &reference, &cond, &group, &[1.0, -1.0], &schedule, 11).unwrap_err();
    assert!(matches!(err, verigrid_rl::RlError::ZeroSigma { step: 11 }));
}
