//! Task domains behind one trait, registered by name.
//!
//! The reward dispatcher, the dataset generator, the scorer and the toy
//! trainer all go through [`domain_by_name`] / [`domain`], so adding a task
//! means adding one [`TaskDomain`] implementation to [`DOMAINS`].

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::flowfree::{self, flowfree_generate, hamiltonian_path, split_into_flows};
use crate::grid::{Action, Cell};
use crate::instance::{flow_gt_actions, flow_initial_grid, Payload, TaskInstance, TaskKind, Trajectory};
use crate::maze::{self, maze_generate, maze_solve, CarveAlgorithm};
use crate::metrics::{f1_flowfree_cell, f1_maze_pixel, f1_sokoban_action, AlignmentScore};
use crate::palette::Palette;
use crate::render::{decode_actions_lenient, FrameSequence};
use crate::rewards::{self, RewardBreakdown, Verdict};
use crate::rng::SeededRng;
use crate::sokoban::{self, sokoban_generate, sokoban_step};

pub const DEFAULT_CELL_PX: usize = 16;

/// Size and rendering overrides for generation. `None` fields are sampled
/// from the dataset ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct GenOptions {
    pub size: Option<usize>,
    pub boxes: Option<usize>,
    pub colors: Option<usize>,
    pub carve: Option<CarveAlgorithm>,
    pub theme: Option<String>,
    pub cell_px: usize,
    pub state_cap: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            size: None,
            boxes: None,
            colors: None,
            carve: None,
            theme: None,
            cell_px: DEFAULT_CELL_PX,
            state_cap: sokoban::DEFAULT_STATE_CAP,
        }
    }
}

pub trait TaskDomain: Send + Sync {
    fn kind(&self) -> TaskKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// A verified instance, deterministic in `(seed, opts)`.
    fn generate(&self, id: String, seed: u64, opts: &GenOptions) -> Result<TaskInstance>;

    /// Symbolic trajectory produced by executing `actions` on the instance's
    /// initial board (how model outputs become videos).
    fn play(&self, instance: &TaskInstance, actions: &[Action]) -> Result<Trajectory>;

    fn reward(&self, seq: &FrameSequence) -> Result<RewardBreakdown>;

    fn success(&self, seq: &FrameSequence) -> Verdict {
        rewards::success(seq)
    }

    /// Trajectory alignment of `pred` against the reference rendering.
    fn alignment(&self, pred: &FrameSequence, reference: &FrameSequence) -> Result<AlignmentScore>;

    /// Fixed-layout numeric description of the initial board, used as the
    /// toy policy's condition input.
    fn condition_features(&self, instance: &TaskInstance) -> Vec<f64>;
}

pub struct MazeDomain;
pub struct FlowFreeDomain;
pub struct SokobanDomain;

static DOMAINS: [&dyn TaskDomain; 3] = [&MazeDomain, &FlowFreeDomain, &SokobanDomain];

pub fn domains() -> &'static [&'static dyn TaskDomain] {
    &DOMAINS
}

pub fn domain_by_name(name: &str) -> Result<&'static dyn TaskDomain> {
    DOMAINS
        .iter()
        .copied()
        .find(|d| d.name().eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownTask(name.to_string()))
}

pub fn domain(kind: TaskKind) -> &'static dyn TaskDomain {
    domain_by_name(kind.name()).expect("every task kind is registered")
}

/// Routes `seq` to its task's reward.
pub fn dispatch_reward(seq: &FrameSequence) -> Result<RewardBreakdown> {
    domain_by_name(seq.meta.task().name())?.reward(seq)
}

fn pick_palette(opts: &GenOptions, rng: &mut SeededRng) -> Result<Palette> {
    match &opts.theme {
        Some(id) => {
            Palette::builtin(id).ok_or_else(|| Error::InvalidArgument(format!("unknown theme {id:?}")))
        }
        None => Ok(Palette::builtin_themes()
            .choose(rng)
            .cloned()
            .expect("built-in themes exist")),
    }
}

impl TaskDomain for MazeDomain {
    fn kind(&self) -> TaskKind {
        TaskKind::Maze
    }

    fn generate(&self, id: String, seed: u64, opts: &GenOptions) -> Result<TaskInstance> {
        let root = SeededRng::new(seed);
        let mut rng = root.child("maze-params");
        let n = match opts.size {
            Some(n) => n,
            None => {
                let (lo, hi) = (*maze::DATASET_SIZES.start(), *maze::DATASET_SIZES.end());
                lo + 2 * rng.random_range(0..=(hi - lo) / 2)
            }
        };
        let algo = match opts.carve {
            Some(a) => a,
            None => *CarveAlgorithm::ALL.choose(&mut rng).expect("non-empty"),
        };
        let board = maze_generate(n, algo, seed)?;
        let solution = maze_solve(&board)?;
        Ok(TaskInstance {
            id,
            seed,
            cell_px: opts.cell_px,
            palette: pick_palette(opts, &mut root.child("theme"))?,
            gt_actions: solution.actions.clone(),
            payload: Payload::Maze { board, solution },
        })
    }

    /// Walks the pixel grid from the start; stops at the goal or when a move
    /// would leave the board. Moves into walls are kept (and penalised).
    fn play(&self, instance: &TaskInstance, actions: &[Action]) -> Result<Trajectory> {
        let (board, _) = instance
            .maze()
            .ok_or_else(|| wrong_task(instance, TaskKind::Maze))?;
        let goal = board.goal_pixel();
        let mut head = board.start_pixel();
        let mut path = vec![head];
        for &a in actions {
            if head == goal {
                break;
            }
            match head.step(a).filter(|c| board.pixel_bounds().contains(*c)) {
                Some(next) => {
                    head = next;
                    path.push(next);
                }
                None => break,
            }
        }
        Ok(Trajectory::Maze(path))
    }

    fn reward(&self, seq: &FrameSequence) -> Result<RewardBreakdown> {
        rewards::reward_maze(seq)
    }

    fn alignment(&self, pred: &FrameSequence, reference: &FrameSequence) -> Result<AlignmentScore> {
        f1_maze_pixel(pred, reference)
    }

    fn condition_features(&self, instance: &TaskInstance) -> Vec<f64> {
        instance
            .maze()
            .map(|(b, _)| b.walls.iter().map(|&w| if w { 1.0 } else { -1.0 }).collect())
            .unwrap_or_default()
    }
}

impl TaskDomain for FlowFreeDomain {
    fn kind(&self) -> TaskKind {
        TaskKind::FlowFree
    }

    fn generate(&self, id: String, seed: u64, opts: &GenOptions) -> Result<TaskInstance> {
        let root = SeededRng::new(seed);
        let n = match opts.size {
            Some(n) => n,
            None => root
                .child("flowfree-params")
                .random_range(flowfree::DATASET_SIZES),
        };
        let board = match opts.colors {
            Some(k) => split_into_flows(&hamiltonian_path(n, seed)?, k, seed)?,
            None => flowfree_generate(n, seed)?,
        };
        Ok(TaskInstance {
            id,
            seed,
            cell_px: opts.cell_px,
            palette: pick_palette(opts, &mut root.child("theme"))?,
            gt_actions: flow_gt_actions(&board),
            payload: Payload::FlowFree { board },
        })
    }

    /// A pen starts on colour 0's first endpoint. Each move paints the entered
    /// cell in the pen's colour; entering the colour's second endpoint
    /// finishes it and lifts the pen to the next colour's first endpoint.
    /// Moves off the board are ignored. Only painting changes emit frames.
    fn play(&self, instance: &TaskInstance, actions: &[Action]) -> Result<Trajectory> {
        let board = instance
            .flowfree()
            .ok_or_else(|| wrong_task(instance, TaskKind::FlowFree))?;
        let bounds = board.bounds();
        let mut grid = flow_initial_grid(board);
        let mut grids = vec![grid.clone()];
        let mut color = 0;
        let mut head = board.endpoints[0][0];
        for &a in actions {
            if color >= board.num_colors {
                break;
            }
            let Some(next) = head.step(a).filter(|c| bounds.contains(*c)) else {
                continue;
            };
            head = next;
            if next == board.endpoints[color][1] {
                color += 1;
                if let Some(ends) = board.endpoints.get(color) {
                    head = ends[0];
                }
                continue;
            }
            let slot = &mut grid[bounds.index(next)];
            if *slot != Some(color) {
                *slot = Some(color);
                grids.push(grid.clone());
            }
        }
        Ok(Trajectory::FlowFree(grids))
    }

    fn reward(&self, seq: &FrameSequence) -> Result<RewardBreakdown> {
        rewards::reward_flowfree(seq)
    }

    fn alignment(&self, pred: &FrameSequence, reference: &FrameSequence) -> Result<AlignmentScore> {
        f1_flowfree_cell(pred, reference)
    }

    fn condition_features(&self, instance: &TaskInstance) -> Vec<f64> {
        let Some(board) = instance.flowfree() else {
            return Vec::new();
        };
        let b = board.bounds();
        let k = board.num_colors as f64;
        let mut out = vec![0.0; 2 * b.len()];
        for (i, ends) in board.endpoints.iter().enumerate() {
            for (j, e) in ends.iter().enumerate() {
                // First and second endpoints get separate planes.
                out[j * b.len() + b.index(*e)] = (i as f64 + 1.0) / k;
            }
        }
        out
    }
}

impl TaskDomain for SokobanDomain {
    fn kind(&self) -> TaskKind {
        TaskKind::Sokoban
    }

    fn generate(&self, id: String, seed: u64, opts: &GenOptions) -> Result<TaskInstance> {
        let root = SeededRng::new(seed);
        let mut rng = root.child("sokoban-params");
        let size = opts.size.unwrap_or_else(|| rng.random_range(sokoban::SIZES));
        let boxes = opts
            .boxes
            .unwrap_or_else(|| rng.random_range(sokoban::BOX_COUNTS));
        let (level, solution) = sokoban_generate(size, boxes, seed, opts.state_cap)?;
        Ok(TaskInstance {
            id,
            seed,
            cell_px: opts.cell_px,
            palette: pick_palette(opts, &mut root.child("theme"))?,
            gt_actions: solution.actions.clone(),
            payload: Payload::Sokoban { level, solution },
        })
    }

    /// Illegal moves leave the board unchanged (an identity frame).
    fn play(&self, instance: &TaskInstance, actions: &[Action]) -> Result<Trajectory> {
        let (level, _) = instance
            .sokoban()
            .ok_or_else(|| wrong_task(instance, TaskKind::Sokoban))?;
        let mut states = vec![level.initial.clone()];
        for &a in actions {
            let cur = states.last().expect("non-empty");
            let next = sokoban_step(level, cur, a).unwrap_or_else(|_| cur.clone());
            let done = level.is_goal(&next);
            states.push(next);
            if done {
                break;
            }
        }
        Ok(Trajectory::Sokoban(states))
    }

    fn reward(&self, seq: &FrameSequence) -> Result<RewardBreakdown> {
        rewards::reward_sokoban(seq)
    }

    fn alignment(&self, pred: &FrameSequence, reference: &FrameSequence) -> Result<AlignmentScore> {
        let decoded = decode_actions_lenient(pred)?;
        Ok(f1_sokoban_action(&decoded, &reference.meta.gt_actions))
    }

    fn condition_features(&self, instance: &TaskInstance) -> Vec<f64> {
        let Some((level, _)) = instance.sokoban() else {
            return Vec::new();
        };
        level
            .bounds()
            .cells()
            .map(|c: Cell| {
                if level.is_wall(c) {
                    1.0
                } else if level.initial.player == c {
                    -1.0
                } else if level.initial.has_box(c) {
                    -0.5
                } else if level.is_target(c) {
                    0.5
                } else {
                    0.0
                }
            })
            .collect()
    }
}

fn wrong_task(instance: &TaskInstance, expected: TaskKind) -> Error {
    Error::InvalidArgument(format!("expected a {expected} instance, got {}", instance.task()))
}
