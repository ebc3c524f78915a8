//! Perfect-maze generation, shortest-path solving and corridor expansion.
//!
//! A board of pixel size `n` (odd) holds `(n - 1) / 2` logical cells per side.
//! Logical cell `(r, c)` sits on pixel `(2r + 1, 2c + 1)`; the pixel between
//! two adjacent logical cells is their shared corridor, open iff the carver
//! joined them.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{derive_actions, Action, Bounds, Cell};
use crate::rng::SeededRng;

pub const MIN_PIXEL_SIZE: usize = 5;
pub const MAX_PIXEL_SIZE: usize = 99;
/// Pixel sizes used for datasets.
pub const DATASET_SIZES: std::ops::RangeInclusive<usize> = 7..=21;

/// A maze carving strategy: returns the logical edges to open, which must
/// form a spanning tree over `cells`.
pub trait MazeCarver: Send + Sync {
    fn name(&self) -> &'static str;
    fn carve(&self, cells: Bounds, rng: &mut SeededRng) -> Vec<(Cell, Cell)>;
}

/// Randomised depth-first search (recursive backtracker).
pub struct DfsCarver;
/// Randomised Prim: grow from a seed cell, opening a random frontier edge.
pub struct PrimCarver;
/// Randomised Kruskal: shuffled edges joined through union-find.
pub struct KruskalCarver;

static CARVERS: [&dyn MazeCarver; 3] = [&DfsCarver, &PrimCarver, &KruskalCarver];

pub fn carvers() -> &'static [&'static dyn MazeCarver] {
    &CARVERS
}

pub fn carver(name: &str) -> Option<&'static dyn MazeCarver> {
    CARVERS.iter().copied().find(|c| c.name() == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CarveAlgorithm {
    Dfs,
    Prim,
    Kruskal,
}

impl CarveAlgorithm {
    pub const ALL: [CarveAlgorithm; 3] = [CarveAlgorithm::Dfs, CarveAlgorithm::Prim, CarveAlgorithm::Kruskal];

    pub fn name(self) -> &'static str {
        match self {
            CarveAlgorithm::Dfs => "dfs",
            CarveAlgorithm::Prim => "prim",
            CarveAlgorithm::Kruskal => "kruskal",
        }
    }

    pub fn carver(self) -> &'static dyn MazeCarver {
        carver(self.name()).expect("every algorithm is registered")
    }
}

impl fmt::Display for CarveAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CarveAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CarveAlgorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown carve algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MazeBoard {
    /// Pixel grid side, walls included.
    pub n: usize,
    /// Row-major, `true` = wall. Serialized as a `0`/`1` string.
    #[serde(with = "bitstring")]
    pub walls: Vec<bool>,
    /// Logical start cell.
    pub start: Cell,
    /// Logical goal cell.
    pub goal: Cell,
    pub carve_algorithm: CarveAlgorithm,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MazeSolution {
    pub logical_path: Vec<Cell>,
    pub pixel_path: Vec<Cell>,
    pub actions: Vec<Action>,
}

impl MazeBoard {
    pub fn pixel_bounds(&self) -> Bounds {
        Bounds::square(self.n)
    }

    pub fn logical_bounds(&self) -> Bounds {
        Bounds::square((self.n - 1) / 2)
    }

    pub fn is_wall(&self, pixel: Cell) -> bool {
        let b = self.pixel_bounds();
        !b.contains(pixel) || self.walls[b.index(pixel)]
    }

    pub fn start_pixel(&self) -> Cell {
        to_pixel(self.start)
    }

    pub fn goal_pixel(&self) -> Cell {
        to_pixel(self.goal)
    }

    /// Number of internal walls the carver opened.
    pub fn opened_walls(&self) -> usize {
        let cells = self.logical_bounds();
        cells
            .cells()
            .flat_map(|c| {
                [Action::D, Action::R]
                    .into_iter()
                    .filter_map(move |a| c.step(a).filter(|o| cells.contains(*o)).map(|o| (c, o)))
            })
            .filter(|&(a, b)| !self.is_wall(corridor(a, b)))
            .count()
    }

    /// Logical neighbours reachable through an open corridor, `U, D, L, R` order.
    pub fn open_neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        c.neighbors(self.logical_bounds())
            .filter(move |(_, o)| !self.is_wall(corridor(c, *o)))
            .map(|(_, o)| o)
    }

    /// Builds a board from explicitly opened logical edges.
    pub fn from_edges(
        n: usize,
        edges: &[(Cell, Cell)],
        carve_algorithm: CarveAlgorithm,
        seed: u64,
    ) -> Result<MazeBoard> {
        check_size(n)?;
        let pixels = Bounds::square(n);
        let cells = Bounds::square((n - 1) / 2);
        let mut walls = vec![true; pixels.len()];
        for c in cells.cells() {
            walls[pixels.index(to_pixel(c))] = false;
        }
        for &(a, b) in edges {
            if !a.is_adjacent(b) {
                return Err(Error::NonAdjacentCells { from: a, to: b });
            }
            if !cells.contains(a) || !cells.contains(b) {
                return Err(Error::InvalidSize(format!("edge {a}-{b} outside the board")));
            }
            walls[pixels.index(corridor(a, b))] = false;
        }
        Ok(MazeBoard {
            n,
            walls,
            start: Cell::new(0, 0),
            goal: Cell::new(cells.rows - 1, cells.cols - 1),
            carve_algorithm,
            seed,
        })
    }
}

pub fn to_pixel(c: Cell) -> Cell {
    Cell::new(2 * c.row + 1, 2 * c.col + 1)
}

/// Pixel between two adjacent logical cells.
pub fn corridor(a: Cell, b: Cell) -> Cell {
    Cell::new(a.row + b.row + 1, a.col + b.col + 1)
}

fn check_size(n: usize) -> Result<()> {
    if n.is_multiple_of(2) || !(MIN_PIXEL_SIZE..=MAX_PIXEL_SIZE).contains(&n) {
        return Err(Error::InvalidSize(format!(
            "maze size must be odd in [{MIN_PIXEL_SIZE}, {MAX_PIXEL_SIZE}], got {n}"
        )));
    }
    Ok(())
}

pub fn maze_generate(n: usize, algo: CarveAlgorithm, seed: u64) -> Result<MazeBoard> {
    check_size(n)?;
    let cells = Bounds::square((n - 1) / 2);
    let mut rng = SeededRng::new(seed).child(algo.name());
    let edges = algo.carver().carve(cells, &mut rng);
    MazeBoard::from_edges(n, &edges, algo, seed)
}

/// Breadth-first shortest path from start to goal over open corridors.
pub fn maze_solve(board: &MazeBoard) -> Result<MazeSolution> {
    let cells = board.logical_bounds();
    let mut prev: Vec<Option<Cell>> = vec![None; cells.len()];
    let mut seen = vec![false; cells.len()];
    let mut queue = VecDeque::from([board.start]);
    seen[cells.index(board.start)] = true;
    while let Some(c) = queue.pop_front() {
        if c == board.goal {
            break;
        }
        for o in board.open_neighbors(c) {
            let i = cells.index(o);
            if !seen[i] {
                seen[i] = true;
                prev[i] = Some(c);
                queue.push_back(o);
            }
        }
    }
    if !seen[cells.index(board.goal)] {
        return Err(Error::InvalidArgument(
            "goal unreachable; board is not a spanning tree".into(),
        ));
    }
    let mut logical_path = vec![board.goal];
    let mut cur = board.goal;
    while let Some(p) = prev[cells.index(cur)] {
        logical_path.push(p);
        cur = p;
    }
    logical_path.reverse();
    let pixel_path = expand_to_pixels(board, &logical_path)?;
    let actions = derive_actions(&pixel_path)?;
    Ok(MazeSolution {
        logical_path,
        pixel_path,
        actions,
    })
}

/// Maps logical cells to pixels and inserts the corridor pixel between each
/// consecutive pair.
pub fn expand_to_pixels(board: &MazeBoard, logical_path: &[Cell]) -> Result<Vec<Cell>> {
    let mut out = Vec::with_capacity(logical_path.len().saturating_mul(2));
    let Some(&first) = logical_path.first() else {
        return Ok(out);
    };
    out.push(to_pixel(first));
    for w in logical_path.windows(2) {
        if !w[0].is_adjacent(w[1]) {
            return Err(Error::NonAdjacentCells { from: w[0], to: w[1] });
        }
        let mid = corridor(w[0], w[1]);
        if board.is_wall(mid) {
            return Err(Error::WallViolation(mid));
        }
        out.push(mid);
        out.push(to_pixel(w[1]));
    }
    Ok(out)
}

/// Wall-respecting BFS distances (in pixel steps) from `from` to every pixel;
/// `usize::MAX` marks unreachable pixels and walls.
pub fn pixel_distances(board: &MazeBoard, from: Cell) -> Vec<usize> {
    let b = board.pixel_bounds();
    let mut dist = vec![usize::MAX; b.len()];
    if board.is_wall(from) {
        return dist;
    }
    dist[b.index(from)] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        let d = dist[b.index(c)];
        for (_, o) in c.neighbors(b) {
            let i = b.index(o);
            if !board.walls[i] && dist[i] == usize::MAX {
                dist[i] = d + 1;
                queue.push_back(o);
            }
        }
    }
    dist
}

impl MazeCarver for DfsCarver {
    fn name(&self) -> &'static str {
        "dfs"
    }

    fn carve(&self, cells: Bounds, rng: &mut SeededRng) -> Vec<(Cell, Cell)> {
        let mut edges = Vec::with_capacity(cells.len().saturating_sub(1));
        if cells.is_empty() {
            return edges;
        }
        let mut visited = vec![false; cells.len()];
        let start = cells.cell(rng.random_range(0..cells.len()));
        visited[cells.index(start)] = true;
        let mut stack = vec![start];
        while let Some(&top) = stack.last() {
            let mut options: Vec<Cell> = top
                .neighbors(cells)
                .map(|(_, c)| c)
                .filter(|c| !visited[cells.index(*c)])
                .collect();
            if options.is_empty() {
                stack.pop();
                continue;
            }
            options.shuffle(rng);
            let next = options[0];
            visited[cells.index(next)] = true;
            edges.push((top, next));
            stack.push(next);
        }
        edges
    }
}

impl MazeCarver for PrimCarver {
    fn name(&self) -> &'static str {
        "prim"
    }

    fn carve(&self, cells: Bounds, rng: &mut SeededRng) -> Vec<(Cell, Cell)> {
        let mut edges = Vec::with_capacity(cells.len().saturating_sub(1));
        if cells.is_empty() {
            return edges;
        }
        let mut visited = vec![false; cells.len()];
        let start = cells.cell(rng.random_range(0..cells.len()));
        visited[cells.index(start)] = true;
        let mut frontier: Vec<(Cell, Cell)> = start.neighbors(cells).map(|(_, c)| (start, c)).collect();
        while !frontier.is_empty() {
            let (from, to) = frontier.swap_remove(rng.random_range(0..frontier.len()));
            if visited[cells.index(to)] {
                continue;
            }
            visited[cells.index(to)] = true;
            edges.push((from, to));
            frontier.extend(
                to.neighbors(cells)
                    .filter(|(_, c)| !visited[cells.index(*c)])
                    .map(|(_, c)| (to, c)),
            );
        }
        edges
    }
}

impl MazeCarver for KruskalCarver {
    fn name(&self) -> &'static str {
        "kruskal"
    }

    fn carve(&self, cells: Bounds, rng: &mut SeededRng) -> Vec<(Cell, Cell)> {
        let mut candidates: Vec<(Cell, Cell)> = cells
            .cells()
            .flat_map(|c| {
                [Action::D, Action::R]
                    .into_iter()
                    .filter_map(move |a| c.step(a).filter(|o| cells.contains(*o)).map(|o| (c, o)))
            })
            .collect();
        candidates.shuffle(rng);
        let mut sets = DisjointSets::new(cells.len());
        candidates
            .into_iter()
            .filter(|&(a, b)| sets.union(cells.index(a), cells.index(b)))
            .collect()
    }
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins the sets of `a` and `b`; false if they were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

mod bitstring {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
        let text: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        s.serialize_str(&text)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let text = String::deserialize(d)?;
        text.chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(serde::de::Error::custom(format!("bad wall bit {other:?}"))),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_board() -> MazeBoard {
        let c = Cell::new;
        let edges = [
            (c(0, 0), c(0, 1)),
            (c(0, 1), c(0, 2)),
            (c(0, 2), c(1, 2)),
            (c(1, 2), c(2, 2)),
            (c(0, 0), c(1, 0)),
            (c(1, 0), c(1, 1)),
            (c(1, 1), c(2, 1)),
            (c(2, 1), c(2, 0)),
        ];
        MazeBoard::from_edges(7, &edges, CarveAlgorithm::Dfs, 0).unwrap()
    }

    #[test]
    fn spanning_tree_edge_count() {
        for algo in CarveAlgorithm::ALL {
            for seed in 0..20 {
                let b = maze_generate(7, algo, seed).unwrap();
                assert_eq!(b.opened_walls(), 8, "{algo} seed {seed}");
                let b = maze_generate(21, algo, seed).unwrap();
                assert_eq!(b.opened_walls(), 99);
            }
        }
    }

    #[test]
    fn border_is_walled_and_cells_open() {
        let b = maze_generate(11, CarveAlgorithm::Prim, 3).unwrap();
        for i in 0..b.n {
            for c in [
                Cell::new(0, i),
                Cell::new(b.n - 1, i),
                Cell::new(i, 0),
                Cell::new(i, b.n - 1),
            ] {
                assert!(b.is_wall(c));
            }
        }
        for c in b.logical_bounds().cells() {
            assert!(!b.is_wall(to_pixel(c)));
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = maze_generate(7, CarveAlgorithm::Prim, 11).unwrap();
        let b = maze_generate(7, CarveAlgorithm::Prim, 11).unwrap();
        assert_eq!(a.walls, b.walls);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(
            maze_generate(8, CarveAlgorithm::Dfs, 1),
            Err(Error::InvalidSize(_))
        ));
        assert!(matches!(
            maze_generate(3, CarveAlgorithm::Dfs, 1),
            Err(Error::InvalidSize(_))
        ));
        assert!(matches!(
            maze_generate(101, CarveAlgorithm::Dfs, 1),
            Err(Error::InvalidSize(_))
        ));
    }

    #[test]
    fn hand_board_solution() {
        let b = hand_board();
        let sol = maze_solve(&b).unwrap();
        assert_eq!(sol.logical_path.len(), 5);
        let logical_actions = derive_actions(&sol.logical_path).unwrap();
        assert_eq!(logical_actions, vec![Action::R, Action::R, Action::D, Action::D]);
        use Action::*;
        assert_eq!(sol.actions, vec![R, R, R, R, D, D, D, D]);
        assert_eq!(sol.pixel_path.len(), 9);
    }

    #[test]
    fn degenerate_start_equals_goal() {
        let mut b = maze_generate(5, CarveAlgorithm::Kruskal, 0).unwrap();
        b.goal = b.start;
        let sol = maze_solve(&b).unwrap();
        assert_eq!(sol.logical_path, vec![b.start]);
        assert!(sol.actions.is_empty());
    }

    #[test]
    fn expand_examples() {
        let b = hand_board();
        let c = Cell::new;
        assert_eq!(
            expand_to_pixels(&b, &[c(0, 0), c(0, 1)]).unwrap(),
            vec![c(1, 1), c(1, 2), c(1, 3)]
        );
        assert_eq!(expand_to_pixels(&b, &[c(0, 0)]).unwrap(), vec![c(1, 1)]);
        // (0,1)-(1,1) is closed in the hand board.
        assert!(matches!(
            expand_to_pixels(&b, &[c(0, 1), c(1, 1)]),
            Err(Error::WallViolation(_))
        ));
    }

    #[test]
    fn bitstring_round_trip() {
        let b = maze_generate(9, CarveAlgorithm::Dfs, 5).unwrap();
        let json = serde_json::to_string(&b).unwrap();
        assert!(json.contains("\"walls\":\"1111111111"));
        let back: MazeBoard = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(carvers().len(), 3);
        assert_eq!(carver("kruskal").unwrap().name(), "kruskal");
        assert!(carver("eller").is_none());
        assert_eq!("PRIM".parse::<CarveAlgorithm>().unwrap(), CarveAlgorithm::Prim);
    }
}
