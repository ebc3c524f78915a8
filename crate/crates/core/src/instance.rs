//! Task instances and the symbolic state trajectories that get rendered.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowfree::FlowBoard;
use crate::grid::{actions_from_str, actions_to_string, Action, Bounds, Cell};
use crate::maze::{MazeBoard, MazeSolution};
use crate::palette::Palette;
use crate::sokoban::{SokobanLevel, SokobanSolution, SokobanState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Maze,
    FlowFree,
    Sokoban,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Maze, TaskKind::FlowFree, TaskKind::Sokoban];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Maze => "maze",
            TaskKind::FlowFree => "flowfree",
            TaskKind::Sokoban => "sokoban",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownTask(s.to_string()))
    }
}

/// Board plus ground-truth solution, tagged by task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum Payload {
    Maze {
        board: MazeBoard,
        solution: MazeSolution,
    },
    FlowFree {
        board: FlowBoard,
    },
    Sokoban {
        level: SokobanLevel,
        solution: SokobanSolution,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub seed: u64,
    pub cell_px: usize,
    pub palette: Palette,
    #[serde(with = "action_string")]
    pub gt_actions: Vec<Action>,
    #[serde(flatten)]
    pub payload: Payload,
}

impl TaskInstance {
    pub fn task(&self) -> TaskKind {
        match self.payload {
            Payload::Maze { .. } => TaskKind::Maze,
            Payload::FlowFree { .. } => TaskKind::FlowFree,
            Payload::Sokoban { .. } => TaskKind::Sokoban,
        }
    }

    /// Board extent in rendered cells.
    pub fn grid_bounds(&self) -> Bounds {
        match &self.payload {
            Payload::Maze { board, .. } => board.pixel_bounds(),
            Payload::FlowFree { board } => board.bounds(),
            Payload::Sokoban { level, .. } => level.bounds(),
        }
    }

    pub fn maze(&self) -> Option<(&MazeBoard, &MazeSolution)> {
        match &self.payload {
            Payload::Maze { board, solution } => Some((board, solution)),
            _ => None,
        }
    }

    pub fn flowfree(&self) -> Option<&FlowBoard> {
        match &self.payload {
            Payload::FlowFree { board } => Some(board),
            _ => None,
        }
    }

    pub fn sokoban(&self) -> Option<(&SokobanLevel, &SokobanSolution)> {
        match &self.payload {
            Payload::Sokoban { level, solution } => Some((level, solution)),
            _ => None,
        }
    }

    /// The ground-truth symbolic trajectory.
    pub fn gt_trajectory(&self) -> Trajectory {
        match &self.payload {
            Payload::Maze { solution, .. } => Trajectory::Maze(solution.pixel_path.clone()),
            Payload::FlowFree { board } => Trajectory::FlowFree(flow_gt_grids(board)),
            Payload::Sokoban { solution, .. } => Trajectory::Sokoban(solution.states.clone()),
        }
    }
}

/// Per-cell flow colour, `None` for an empty cell.
pub type FlowGrid = Vec<Option<usize>>;

/// A symbolic state sequence, one entry per logical frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trajectory {
    /// Pixel path starting at the start pixel; frame `f` shows `path[1..=f]`
    /// painted.
    Maze(Vec<Cell>),
    FlowFree(Vec<FlowGrid>),
    Sokoban(Vec<SokobanState>),
}

impl Trajectory {
    pub fn frame_count(&self) -> usize {
        match self {
            Trajectory::Maze(p) => p.len().max(1),
            Trajectory::FlowFree(g) => g.len(),
            Trajectory::Sokoban(s) => s.len(),
        }
    }
}

/// Grid with only the endpoint dots coloured.
pub fn flow_initial_grid(board: &FlowBoard) -> FlowGrid {
    let b = board.bounds();
    let mut grid = vec![None; b.len()];
    for (i, ends) in board.endpoints.iter().enumerate() {
        for e in ends {
            grid[b.index(*e)] = Some(i);
        }
    }
    grid
}

/// Colours each flow cell by cell, colour by colour, in path order.
pub fn flow_gt_grids(board: &FlowBoard) -> Vec<FlowGrid> {
    let b = board.bounds();
    let mut grid = flow_initial_grid(board);
    let mut out = vec![grid.clone()];
    for (i, seg) in board.segments.iter().enumerate() {
        for c in &seg[1..seg.len() - 1] {
            grid[b.index(*c)] = Some(i);
            out.push(grid.clone());
        }
    }
    out
}

/// Moves along each flow in colour order, as one action list.
pub fn flow_gt_actions(board: &FlowBoard) -> Vec<Action> {
    board
        .segments
        .iter()
        .flat_map(|s| crate::grid::derive_actions(s).expect("segments are contiguous"))
        .collect()
}

mod action_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &[Action], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&actions_to_string(a))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Action>, D::Error> {
        let text = String::deserialize(d)?;
        actions_from_str(&text).map_err(serde::de::Error::custom)
    }
}
