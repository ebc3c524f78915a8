mod common;

use verigrid::grid::Action;
use verigrid::rewards::RewardMode;
use verigrid::TaskKind;
use verigrid_rl::latent::{decode_latent, encode_actions, LOGITS_PER_SLOT};
use verigrid_rl::rollout::rollout_group;
use verigrid_rl::{DenoiseSchedule, RlError};

#[test]
fn noiseless_group_is_identical() {
    let cond = common::condition(TaskKind::Sokoban, 1, 16);
    let model = common::model(&cond, 16, 2);
    let schedule = DenoiseSchedule::new(20, 0, 0.0).unwrap();
    let group = rollout_group(&model, &cond, &schedule, 2, 3, RewardMode::Dense).unwrap();
    assert_eq!(group[0].steps, group[1].steps);
    assert_eq!(group[0].actions, group[1].actions);
    assert_eq!(group[0].reward, group[1].reward);
}

#[test]
fn group_of_one_rejected() {
    let cond = common::condition(TaskKind::Maze, 1, 16);
    let model = common::model(&cond, 16, 2);
    let schedule = DenoiseSchedule::new(20, 10, 0.7).unwrap();
    let err = rollout_group(&model, &cond, &schedule, 1, 3, RewardMode::Dense).unwrap_err();
    assert!(matches!(err, RlError::GroupTooSmall(1)));
}

#[test]
fn serial_and_parallel_rollouts_agree() {
    let cond = common::condition(TaskKind::FlowFree, 4, 24);
    let model = common::model(&cond, 32, 5);
    let schedule = DenoiseSchedule::new(20, 10, 0.7).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| rollout_group(&model, &cond, &schedule, 16, 77, RewardMode::Dense).unwrap())
    };
    let serial = run(1);
    let parallel = run(4);
    assert_eq!(serial, parallel);
    let rewards: Vec<f64> = serial.iter().map(|r| r.reward.combined).collect();
    assert!(
        rewards.iter().any(|r| *r != rewards[0]),
        "group rewards have no spread"
    );
}

#[test]
fn same_seed_same_group() {
    let cond = common::condition(TaskKind::Maze, 6, 16);
    let model = common::model(&cond, 16, 5);
    let schedule = DenoiseSchedule::new(20, 10, 0.7).unwrap();
    let a = rollout_group(&model, &cond, &schedule, 4, 8, RewardMode::Sparse).unwrap();
    let b = rollout_group(&model, &cond, &schedule, 4, 8, RewardMode::Sparse).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|r| r.scalar == 0.0 || r.scalar == 1.0));
    // Shared start, separate noise after it.
    assert_eq!(a[0].steps[0].x, a[1].steps[0].x);
    assert_ne!(a[0].steps[0].x_next, a[1].steps[0].x_next);
}

#[test]
fn argmax_decoding() {
    let cond = common::condition(TaskKind::Sokoban, 1, 4);
    let mut z = vec![0.0; 4 * LOGITS_PER_SLOT];
    z[Action::R.index()] = 1.0;
    z[LOGITS_PER_SLOT + Action::D.index()] = 1.0;
    for slot in 2..4 {
        z[slot * LOGITS_PER_SLOT] = 5.0;
        z[slot * LOGITS_PER_SLOT + 1] = -5.0;
    }
    assert_eq!(
        decode_latent(&z, &cond.instance),
        [Action::R, Action::D, Action::U, Action::U]
    );
    assert_eq!(decode_latent(&[0.0; 8], &cond.instance), [Action::U, Action::U]);
}

#[test]
fn maze_decoding_stops_at_goal() {
    let cond = common::condition(TaskKind::Maze, 3, 16);
    let gt = cond.instance.gt_actions.clone();
    assert!(gt.len() < 16);
    let mut z = encode_actions(&gt, 16).unwrap();
    // Slots past the solution point somewhere else entirely.
    for slot in gt.len()..16 {
        z[slot * LOGITS_PER_SLOT + Action::L.index()] = 2.0;
    }
    assert_eq!(decode_latent(&z, &cond.instance), gt);
}
