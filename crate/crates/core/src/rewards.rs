//! Dense decomposed rewards and symbolic success detectors.
//!
//! Every reward is computed from parsed frames plus the instance metadata,
//! never from the generator's internal state.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Action, Bounds, Cell};
use crate::instance::{TaskInstance, TaskKind};
use crate::maze::pixel_distances;
use crate::render::{parse_flow_grid, parse_maze_painted, parse_sokoban_state, FrameSequence};
use crate::sokoban::sokoban_step;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowFreeWeights {
    pub valid: f64,
    pub pres: f64,
    pub conn: f64,
    pub fill: f64,
}

impl Default for FlowFreeWeights {
    fn default() -> Self {
        Self {
            valid: 0.15,
            pres: 0.35,
            conn: 0.30,
            fill: 0.20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SokobanWeights {
    pub state: f64,
    pub proc: f64,
}

impl Default for SokobanWeights {
    fn default() -> Self {
        Self {
            state: 0.5,
            proc: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub task: TaskKind,
    pub components: BTreeMap<String, f64>,
    pub weights: BTreeMap<String, f64>,
    pub combined: f64,
    pub success: bool,
}

impl RewardBreakdown {
    pub fn component(&self, name: &str) -> f64 {
        self.components.get(name).copied().unwrap_or(f64::NAN)
    }

    /// Re-derives the combined value from components and weights: a product
    /// for maze, a weighted sum otherwise.
    pub fn recompute(&self) -> f64 {
        match self.task {
            TaskKind::Maze => self.components.values().product(),
            _ => self
                .components
                .iter()
                .map(|(k, v)| v * self.weights.get(k).copied().unwrap_or(0.0))
                .sum(),
        }
    }
}

fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Cells of `grid` 4-connected to `seed` through cells where `member` holds.
fn flood(bounds: Bounds, seed: Cell, member: impl Fn(Cell) -> bool) -> Vec<bool> {
    let mut seen = vec![false; bounds.len()];
    seen[bounds.index(seed)] = true;
    let mut queue = VecDeque::from([seed]);
    while let Some(c) = queue.pop_front() {
        for (_, o) in c.neighbors(bounds) {
            let i = bounds.index(o);
            if !seen[i] && member(o) {
                seen[i] = true;
                queue.push_back(o);
            }
        }
    }
    seen
}

/// `R_maze = R_conn * R_wall` on the final frame.
///
/// `R_conn = 1 - d(closest reached pixel, goal) / d(start, goal)`, where the
/// reached pixels are painted pixels 4-connected to the start and `d` is the
/// wall-respecting BFS distance. `R_wall = 1 - wall paintings / paintings`.
pub fn reward_maze(seq: &FrameSequence) -> Result<RewardBreakdown> {
    let meta = &seq.meta;
    let (board, _) = meta
        .maze()
        .ok_or_else(|| Error::InvalidArgument("maze reward on a non-maze instance".into()))?;
    let painted = parse_maze_painted(seq.last(), meta)?;
    let bounds = board.pixel_bounds();
    let start = board.start_pixel();
    let goal = board.goal_pixel();

    let total = painted.iter().filter(|p| **p).count();
    let on_walls = bounds
        .cells()
        .filter(|c| painted[bounds.index(*c)] && board.is_wall(*c))
        .count();
    let wall = if total == 0 {
        1.0
    } else {
        (1.0 - ratio(on_walls, total)).clamp(0.0, 1.0)
    };

    let reached = flood(bounds, start, |c| painted[bounds.index(c)]);
    let to_goal = pixel_distances(board, goal);
    let base = to_goal[bounds.index(start)];
    let closest = bounds
        .cells()
        .filter(|c| reached[bounds.index(*c)])
        .map(|c| to_goal[bounds.index(c)])
        .min()
        .unwrap_or(usize::MAX);
    let conn = if base == 0 {
        1.0
    } else if closest == usize::MAX || base == usize::MAX {
        0.0
    } else {
        (1.0 - closest as f64 / base as f64).clamp(0.0, 1.0)
    };
    let goal_reached = start == goal || (painted[bounds.index(goal)] && reached[bounds.index(goal)]);
    let success = goal_reached && on_walls == 0;
    Ok(RewardBreakdown {
        task: TaskKind::Maze,
        components: map(&[("conn", conn), ("wall", wall)]),
        weights: map(&[("conn", 1.0), ("wall", 1.0)]),
        combined: conn * wall,
        success,
    })
}

pub fn reward_flowfree(seq: &FrameSequence) -> Result<RewardBreakdown> {
    reward_flowfree_with(seq, FlowFreeWeights::default())
}

/// Weighted FlowFree reward on the final frame.
///
/// * `valid`: colours whose endpoints are joined by a monochrome path.
/// * `pres`: endpoint cells still showing their colour.
/// * `conn`: colours whose cells form exactly one 4-connected region.
/// * `fill`: grid cells coloured by a valid colour.
pub fn reward_flowfree_with(seq: &FrameSequence, w: FlowFreeWeights) -> Result<RewardBreakdown> {
    let meta = &seq.meta;
    let board = meta
        .flowfree()
        .ok_or_else(|| Error::InvalidArgument("FlowFree reward on a non-FlowFree instance".into()))?;
    let grid = parse_flow_grid(seq.last(), meta)?;
    let bounds = board.bounds();
    let k = board.num_colors;

    let mut preserved = 0;
    let mut valid = vec![false; k];
    let mut connected = 0;
    for (color, ends) in board.endpoints.iter().enumerate() {
        let has = |c: Cell| grid[bounds.index(c)] == Some(color);
        preserved += ends.iter().filter(|e| has(**e)).count();
        if has(ends[0]) && has(ends[1]) {
            valid[color] = flood(bounds, ends[0], has)[bounds.index(ends[1])];
        }
        let cells: Vec<Cell> = bounds.cells().filter(|c| has(*c)).collect();
        if let Some(&first) = cells.first() {
            let region = flood(bounds, first, has);
            if cells.iter().all(|c| region[bounds.index(*c)]) {
                connected += 1;
            }
        }
    }
    let filled = grid
        .iter()
        .filter(|g| g.is_some_and(|c| valid.get(c).copied().unwrap_or(false)))
        .count();
    let valid_frac = ratio(valid.iter().filter(|v| **v).count(), k);
    let pres = ratio(preserved, 2 * k);
    let conn = ratio(connected, k);
    let fill = ratio(filled, bounds.len());
    let combined = w.valid * valid_frac + w.pres * pres + w.conn * conn + w.fill * fill;
    let success = pres == 1.0 && valid_frac == 1.0 && conn == 1.0 && fill == 1.0;
    Ok(RewardBreakdown {
        task: TaskKind::FlowFree,
        components: map(&[
            ("valid", valid_frac),
            ("pres", pres),
            ("conn", conn),
            ("fill", fill),
        ]),
        weights: map(&[
            ("valid", w.valid),
            ("pres", w.pres),
            ("conn", w.conn),
            ("fill", w.fill),
        ]),
        combined,
        success,
    })
}

pub fn reward_sokoban(seq: &FrameSequence) -> Result<RewardBreakdown> {
    reward_sokoban_with(seq, SokobanWeights::default())
}

/// `state` is the fraction of targets covered in the final frame; `proc` is
/// the fraction of non-identity transitions that a single legal move
/// reproduces (0 when every transition is an identity).
pub fn reward_sokoban_with(seq: &FrameSequence, w: SokobanWeights) -> Result<RewardBreakdown> {
    let meta = &seq.meta;
    let (level, _) = meta
        .sokoban()
        .ok_or_else(|| Error::InvalidArgument("Sokoban reward on a non-Sokoban instance".into()))?;
    let states = seq
        .frames
        .iter()
        .map(|f| parse_sokoban_state(f, meta))
        .collect::<Result<Vec<_>>>()?;
    let mut moves = 0;
    let mut legal = 0;
    for pair in states.windows(2) {
        if pair[0] == pair[1] {
            continue;
        }
        moves += 1;
        let explained = Action::ALL
            .iter()
            .any(|&a| sokoban_step(level, &pair[0], a).is_ok_and(|n| n == pair[1]));
        if explained {
            legal += 1;
        }
    }
    let last = states.last().expect("non-empty");
    let placed = last.boxes.iter().filter(|b| level.is_target(**b)).count();
    let state = ratio(placed, level.targets.len()).min(1.0);
    let proc = ratio(legal, moves);
    let success = proc == 1.0 && state == 1.0;
    Ok(RewardBreakdown {
        task: TaskKind::Sokoban,
        components: map(&[("state", state), ("proc", proc)]),
        weights: map(&[("state", w.state), ("proc", w.proc)]),
        combined: w.state * state + w.proc * proc,
        success,
    })
}

/// Outcome of a symbolic success check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub success: bool,
    pub diagnostic: Option<String>,
}

fn verdict(r: Result<RewardBreakdown>) -> Verdict {
    match r {
        Ok(b) => Verdict {
            success: b.success,
            diagnostic: None,
        },
        Err(e) => Verdict {
            success: false,
            diagnostic: Some(e.to_string()),
        },
    }
}

/// Connected start-to-goal painted path with no wall paintings.
pub fn success_maze(seq: &FrameSequence) -> Verdict {
    verdict(reward_maze(seq))
}

/// Endpoints preserved, every colour joined and connected, grid filled.
pub fn success_flowfree(seq: &FrameSequence) -> Verdict {
    verdict(reward_flowfree(seq))
}

/// Every transition legal and the final boxes on the targets.
pub fn success_sokoban(seq: &FrameSequence) -> Verdict {
    verdict(reward_sokoban(seq))
}

pub fn success(seq: &FrameSequence) -> Verdict {
    match seq.meta.task() {
        TaskKind::Maze => success_maze(seq),
        TaskKind::FlowFree => success_flowfree(seq),
        TaskKind::Sokoban => success_sokoban(seq),
    }
}

/// Binary success reward for the sparse-reward ablation.
pub fn sparse_reward(seq: &FrameSequence) -> f64 {
    if success(seq).success {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    #[default]
    Dense,
    Sparse,
}

impl std::str::FromStr for RewardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(RewardMode::Dense),
            "sparse" => Ok(RewardMode::Sparse),
            other => Err(Error::InvalidArgument(format!("unknown reward mode {other:?}"))),
        }
    }
}

/// The scalar an optimiser sees for `seq` under `mode`.
pub fn scalar_reward(seq: &FrameSequence, mode: RewardMode) -> Result<f64> {
    let dense = crate::domain::dispatch_reward(seq)?;
    Ok(match mode {
        RewardMode::Dense => dense.combined,
        RewardMode::Sparse => {
            if dense.success {
                1.0
            } else {
                0.0
            }
        }
    })
}

/// Re-checks that `instance`'s ground truth verifies.
pub fn verify_ground_truth(instance: &TaskInstance) -> Result<RewardBreakdown> {
    let seq = crate::render::render_states(instance, &instance.gt_trajectory(), None)?;
    crate::domain::dispatch_reward(&seq)
}
