//! Grid coordinates and the four cardinal actions shared by every task.
//!
//! Coordinates are row-major with `(0, 0)` at the top-left; `U` decreases the
//! row index, matching raster order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A row/column coordinate. Serialized as a `[row, col]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    pub fn is_adjacent(self, other: Cell) -> bool {
        self.manhattan(other) == 1
    }

    /// One step in direction `a`, or `None` if it would go negative.
    pub fn step(self, a: Action) -> Option<Cell> {
        let (dr, dc) = a.delta();
        let row = self.row.checked_add_signed(dr)?;
        let col = self.col.checked_add_signed(dc)?;
        Some(Cell { row, col })
    }

    /// The 4-neighbours inside `bounds`, in `U, D, L, R` order.
    pub fn neighbors(self, bounds: Bounds) -> impl Iterator<Item = (Action, Cell)> {
        Action::ALL
            .into_iter()
            .filter_map(move |a| self.step(a).filter(|c| bounds.contains(*c)).map(|c| (a, c)))
    }
}

impl From<[usize; 2]> for Cell {
    fn from([row, col]: [usize; 2]) -> Self {
        Cell { row, col }
    }
}

impl From<Cell> for [usize; 2] {
    fn from(c: Cell) -> Self {
        [c.row, c.col]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// A cardinal move. The derived order `U < D < L < R` is the tie-break order
/// used by every argmax and neighbour scan in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    U,
    D,
    L,
    R,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::U, Action::D, Action::L, Action::R];

    pub const fn delta(self) -> (isize, isize) {
        match self {
            Action::U => (-1, 0),
            Action::D => (1, 0),
            Action::L => (0, -1),
            Action::R => (0, 1),
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub const fn letter(self) -> char {
        match self {
            Action::U => 'U',
            Action::D => 'D',
            Action::L => 'L',
            Action::R => 'R',
        }
    }

    pub fn from_letter(ch: char) -> Option<Action> {
        match ch {
            'U' => Some(Action::U),
            'D' => Some(Action::D),
            'L' => Some(Action::L),
            'R' => Some(Action::R),
            _ => None,
        }
    }

    /// The direction that moves `from` onto `to`, if they are 4-adjacent.
    pub fn between(from: Cell, to: Cell) -> Option<Action> {
        Action::ALL.into_iter().find(|a| from.step(*a) == Some(to))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Renders an action list as a compact string such as `"RRDD"`.
pub fn actions_to_string(actions: &[Action]) -> String {
    actions.iter().map(|a| a.letter()).collect()
}

pub fn actions_from_str(s: &str) -> Result<Vec<Action>> {
    s.chars()
        .map(|ch| {
            Action::from_letter(ch).ok_or_else(|| Error::InvalidArgument(format!("bad action letter {ch:?}")))
        })
        .collect()
}

/// Board extent in cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bounds {
    pub rows: usize,
    pub cols: usize,
}

impl Bounds {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub const fn square(n: usize) -> Self {
        Self { rows: n, cols: n }
    }

    pub fn contains(self, c: Cell) -> bool {
        c.row < self.rows && c.col < self.cols
    }

    pub fn len(self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    pub fn index(self, c: Cell) -> usize {
        c.row * self.cols + c.col
    }

    pub fn cell(self, index: usize) -> Cell {
        Cell::new(index / self.cols, index % self.cols)
    }

    pub fn cells(self) -> impl Iterator<Item = Cell> {
        let cols = self.cols;
        (0..self.len()).map(move |i| Cell::new(i / cols, i % cols))
    }
}

/// Differences successive path cells into actions.
pub fn derive_actions(path: &[Cell]) -> Result<Vec<Action>> {
    path.windows(2)
        .map(|w| Action::between(w[0], w[1]).ok_or(Error::NonAdjacentCells { from: w[0], to: w[1] }))
        .collect()
}

/// Moves one step without clamping.
pub fn apply_action(cell: Cell, a: Action, bounds: Bounds) -> Result<Cell> {
    cell.step(a)
        .filter(|c| bounds.contains(*c))
        .ok_or(Error::OutOfBounds {
            from: cell,
            rows: bounds.rows,
            cols: bounds.cols,
        })
}

/// Replays `actions` from `start`, returning every visited cell.
pub fn replay(start: Cell, actions: &[Action], bounds: Bounds) -> Result<Vec<Cell>> {
    let mut out = Vec::with_capacity(actions.len() + 1);
    out.push(start);
    let mut cur = start;
    for &a in actions {
        cur = apply_action(cur, a, bounds)?;
        out.push(cur);
    }
    Ok(out)
}
