//! Action sequences as latents: `F_slots` slots of four logits in U, D, L, R
//! order.

use verigrid::domain::domain;
use verigrid::grid::Action;
use verigrid::render::{render_states, FrameSequence};
use verigrid::rewards::{RewardBreakdown, RewardMode};
use verigrid::TaskInstance;

use crate::error::{Result, RlError};

pub const DEFAULT_SLOTS: usize = 16;
pub const LOGITS_PER_SLOT: usize = 4;

/// An instance plus its fixed-width condition vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCondition {
    pub instance: TaskInstance,
    pub features: Vec<f64>,
    pub slots: usize,
}

impl LatentCondition {
    /// Condition features are zero-padded (or truncated) to `cond_dim`.
    pub fn new(instance: TaskInstance, slots: usize, cond_dim: usize) -> Self {
        let mut features = domain(instance.task()).condition_features(&instance);
        features.resize(cond_dim, 0.0);
        Self {
            instance,
            features,
            slots,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.slots * LOGITS_PER_SLOT
    }

    /// One-hot slots for the ground-truth actions, zeros after them.
    pub fn target(&self) -> Result<Vec<f64>> {
        encode_actions(&self.instance.gt_actions, self.slots)
    }
}

pub fn encode_actions(actions: &[Action], slots: usize) -> Result<Vec<f64>> {
    if actions.len() > slots {
        return Err(RlError::DimensionMismatch(format!(
            "{} actions do not fit in {slots} slots",
            actions.len()
        )));
    }
    let mut z = vec![0.0; slots * LOGITS_PER_SLOT];
    for (f, a) in actions.iter().enumerate() {
        z[f * LOGITS_PER_SLOT + a.index()] = 1.0;
    }
    Ok(z)
}

/// Argmax per slot (first maximum wins, so ties go U < D < L < R). For a
/// maze the walk is cut as soon as it reaches the goal.
pub fn decode_latent(z: &[f64], instance: &TaskInstance) -> Vec<Action> {
    let mut actions: Vec<Action> = z
        .chunks_exact(LOGITS_PER_SLOT)
        .map(|slot| {
            let mut best = 0;
            for (i, v) in slot.iter().enumerate() {
                if *v > slot[best] {
                    best = i;
                }
            }
            Action::from_index(best).expect("four logits")
        })
        .collect();
    if let Some((board, _)) = instance.maze() {
        let bounds = board.pixel_bounds();
        let goal = board.goal_pixel();
        let mut head = board.start_pixel();
        for (i, a) in actions.iter().enumerate() {
            if let Some(next) = head.step(*a).filter(|c| bounds.contains(*c)) {
                head = next;
            }
            if head == goal {
                actions.truncate(i + 1);
                break;
            }
        }
    }
    actions
}

/// Plays the actions, renders the trajectory and scores the frames.
pub fn score_actions(
    instance: &TaskInstance,
    actions: &[Action],
) -> Result<(FrameSequence, RewardBreakdown)> {
    let dom = domain(instance.task());
    let traj = dom.play(instance, actions)?;
    let seq = render_states(instance, &traj, None)?;
    let breakdown = dom.reward(&seq)?;
    Ok((seq, breakdown))
}

pub fn scalar(breakdown: &RewardBreakdown, mode: RewardMode) -> f64 {
    match mode {
        RewardMode::Dense => breakdown.combined,
        RewardMode::Sparse => {
            if breakdown.success {
                1.0
            } else {
                0.0
            }
        }
    }
}
