//! Sokoban levels, push rules, a move-optimal BFS solver and the sampling
//! generator that keeps only solver-verified levels.

use std::collections::{HashSet, VecDeque};

use rand::seq::{IndexedRandom, IteratorRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Action, Bounds, Cell};
use crate::rng::SeededRng;

pub const DEFAULT_STATE_CAP: usize = 200_000;
pub const MAX_SOLUTION_LEN: usize = 60;
pub const RESAMPLE_BUDGET: usize = 256;
pub const SIZES: std::ops::RangeInclusive<usize> = 6..=10;
pub const BOX_COUNTS: std::ops::RangeInclusive<usize> = 1..=3;

/// Player cell plus the sorted set of box cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SokobanState {
    pub player: Cell,
    pub boxes: Vec<Cell>,
}

impl SokobanState {
    pub fn new(player: Cell, mut boxes: Vec<Cell>) -> Self {
        boxes.sort_unstable();
        Self { player, boxes }
    }

    pub fn has_box(&self, c: Cell) -> bool {
        self.boxes.binary_search(&c).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "LevelText", try_from = "LevelText")]
pub struct SokobanLevel {
    pub size: usize,
    /// Row-major, `true` = wall.
    pub walls: Vec<bool>,
    pub targets: Vec<Cell>,
    pub initial: SokobanState,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SokobanSolution {
    pub actions: Vec<Action>,
    pub states: Vec<SokobanState>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Solved(SokobanSolution),
    /// The goal was not reached within the expansion cap (or at all).
    Unsolvable {
        expanded: usize,
    },
}

impl SolveOutcome {
    pub fn solution(self) -> Option<SokobanSolution> {
        match self {
            SolveOutcome::Solved(s) => Some(s),
            SolveOutcome::Unsolvable { .. } => None,
        }
    }
}

impl SokobanLevel {
    pub fn bounds(&self) -> Bounds {
        Bounds::square(self.size)
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        let b = self.bounds();
        !b.contains(c) || self.walls[b.index(c)]
    }

    pub fn is_target(&self, c: Cell) -> bool {
        self.targets.contains(&c)
    }

    pub fn floors(&self) -> impl Iterator<Item = Cell> + '_ {
        self.bounds().cells().filter(|c| !self.is_wall(*c))
    }

    pub fn is_goal(&self, state: &SokobanState) -> bool {
        state.boxes.len() == self.targets.len() && state.boxes.iter().all(|b| self.is_target(*b))
    }

    /// A non-target floor cell with a wall on one vertical and one
    /// horizontal side; a box there can never move again.
    pub fn is_dead_corner(&self, c: Cell) -> bool {
        if self.is_wall(c) || self.is_target(c) {
            return false;
        }
        let blocked = |a: Action| c.step(a).is_none_or(|o| self.is_wall(o));
        (blocked(Action::U) || blocked(Action::D)) && (blocked(Action::L) || blocked(Action::R))
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = self.bounds();
        if self.walls.len() != bounds.len() {
            return Err(Error::InvalidSize("wall grid size mismatch".into()));
        }
        if self.targets.len() != self.initial.boxes.len() {
            return Err(Error::InvalidArgument("box and target counts differ".into()));
        }
        let s = &self.initial;
        if self.is_wall(s.player) || s.has_box(s.player) {
            return Err(Error::InvalidArgument("player must stand on free floor".into()));
        }
        if s.boxes.iter().chain(&self.targets).any(|c| self.is_wall(*c)) {
            return Err(Error::InvalidArgument(
                "boxes and targets must be on floor".into(),
            ));
        }
        // 4-connectivity of the floor.
        let floors: Vec<Cell> = self.floors().collect();
        let mut seen = vec![false; bounds.len()];
        let mut queue = VecDeque::from([s.player]);
        seen[bounds.index(s.player)] = true;
        let mut reached = 1;
        while let Some(c) = queue.pop_front() {
            for (_, o) in c.neighbors(bounds) {
                if !self.is_wall(o) && !seen[bounds.index(o)] {
                    seen[bounds.index(o)] = true;
                    reached += 1;
                    queue.push_back(o);
                }
            }
        }
        if reached != floors.len() {
            return Err(Error::InvalidArgument("floor is not 4-connected".into()));
        }
        Ok(())
    }
}

/// Applies one move under the push rules.
pub fn sokoban_step(level: &SokobanLevel, state: &SokobanState, a: Action) -> Result<SokobanState> {
    let illegal = || Error::IllegalMove {
        player: state.player,
        action: a,
    };
    let next = state
        .player
        .step(a)
        .filter(|c| !level.is_wall(*c))
        .ok_or_else(illegal)?;
    if !state.has_box(next) {
        return Ok(SokobanState {
            player: next,
            boxes: state.boxes.clone(),
        });
    }
    let beyond = next
        .step(a)
        .filter(|c| !level.is_wall(*c) && !state.has_box(*c))
        .ok_or_else(illegal)?;
    let boxes = state
        .boxes
        .iter()
        .map(|&b| if b == next { beyond } else { b })
        .collect();
    Ok(SokobanState::new(next, boxes))
}

/// Replays `actions` from the level's initial state.
pub fn replay(level: &SokobanLevel, actions: &[Action]) -> Result<Vec<SokobanState>> {
    let mut states = vec![level.initial.clone()];
    for &a in actions {
        let next = sokoban_step(level, states.last().expect("non-empty"), a)?;
        states.push(next);
    }
    Ok(states)
}

// Packed state: player index in the low byte, then each sorted box index.
type Key = u64;

fn pack(bounds: Bounds, player: Cell, boxes: &[Cell]) -> Key {
    let mut idx: Vec<u64> = boxes.iter().map(|b| bounds.index(*b) as u64).collect();
    idx.sort_unstable();
    idx.iter()
        .enumerate()
        .fold(bounds.index(player) as u64, |k, (i, b)| k | (b << (8 * (i + 1))))
}

/// Breadth-first search over `(player, boxes)` states, expanding moves in
/// `U, D, L, R` order. Pushes onto dead corners are pruned; such states can
/// never reach the goal, so optimality is preserved.
pub fn sokoban_solve(level: &SokobanLevel, state_cap: usize) -> SolveOutcome {
    let bounds = level.bounds();
    assert!(
        bounds.len() <= 256 && level.targets.len() <= 7,
        "level too large for packed states"
    );
    let dead: Vec<bool> = bounds.cells().map(|c| level.is_dead_corner(c)).collect();

    struct Node {
        state: SokobanState,
        parent: usize,
        action: Option<Action>,
    }
    let start = level.initial.clone();
    let mut nodes = vec![Node {
        state: start.clone(),
        parent: usize::MAX,
        action: None,
    }];
    let mut seen: HashSet<Key> = HashSet::from([pack(bounds, start.player, &start.boxes)]);
    let mut queue = VecDeque::from([0usize]);
    let mut expanded = 0usize;
    while let Some(id) = queue.pop_front() {
        if level.is_goal(&nodes[id].state) {
            let mut actions = Vec::new();
            let mut states = Vec::new();
            let mut cur = id;
            while cur != usize::MAX {
                states.push(nodes[cur].state.clone());
                if let Some(a) = nodes[cur].action {
                    actions.push(a);
                }
                cur = nodes[cur].parent;
            }
            actions.reverse();
            states.reverse();
            return SolveOutcome::Solved(SokobanSolution { actions, states });
        }
        if expanded >= state_cap {
            return SolveOutcome::Unsolvable { expanded };
        }
        expanded += 1;
        for a in Action::ALL {
            let Ok(next) = sokoban_step(level, &nodes[id].state, a) else {
                continue;
            };
            if next.boxes != nodes[id].state.boxes && next.boxes.iter().any(|b| dead[bounds.index(*b)]) {
                continue;
            }
            if seen.insert(pack(bounds, next.player, &next.boxes)) {
                nodes.push(Node {
                    state: next,
                    parent: id,
                    action: Some(a),
                });
                queue.push_back(nodes.len() - 1);
            }
        }
    }
    SolveOutcome::Unsolvable { expanded }
}

/// Samples levels until one solves within `state_cap` in at most
/// [`MAX_SOLUTION_LEN`] moves.
pub fn sokoban_generate(
    grid_size: usize,
    num_boxes: usize,
    seed: u64,
    state_cap: usize,
) -> Result<(SokobanLevel, SokobanSolution)> {
    if !SIZES.contains(&grid_size) {
        return Err(Error::InvalidSize(format!(
            "Sokoban grid must be in 6..=10, got {grid_size}"
        )));
    }
    if !BOX_COUNTS.contains(&num_boxes) {
        return Err(Error::InvalidSize(format!(
            "Sokoban needs 1..=3 boxes, got {num_boxes}"
        )));
    }
    let root = SeededRng::new(seed);
    for attempt in 0..RESAMPLE_BUDGET {
        let mut rng = root.child_indexed("sokoban-level", attempt as u64);
        let Some(level) = sample_level(grid_size, num_boxes, seed, &mut rng) else {
            continue;
        };
        if let SolveOutcome::Solved(sol) = sokoban_solve(&level, state_cap) {
            if !sol.actions.is_empty() && sol.actions.len() <= MAX_SOLUTION_LEN {
                return Ok((level, sol));
            }
        }
    }
    Err(Error::GenerationExhausted {
        attempts: RESAMPLE_BUDGET,
        seed,
    })
}

fn sample_level(size: usize, num_boxes: usize, seed: u64, rng: &mut SeededRng) -> Option<SokobanLevel> {
    let bounds = Bounds::square(size);
    let interior = (size - 2) * (size - 2);
    // Small rooms with several boxes need extra floor to leave room to push.
    let wanted = (((interior as f64) * rng.random_range(0.45..0.7)).round() as usize)
        .max(4 * num_boxes + 2)
        .min(interior);
    let mut walls = vec![true; bounds.len()];
    let mut cur = Cell::new(rng.random_range(1..size - 1), rng.random_range(1..size - 1));
    walls[bounds.index(cur)] = false;
    let mut open = 1;
    // Random walk over the interior keeps the floor 4-connected.
    while open < wanted {
        let (_, next) = cur
            .neighbors(bounds)
            .filter(|(_, c)| c.row > 0 && c.col > 0 && c.row < size - 1 && c.col < size - 1)
            .choose(rng)?;
        if std::mem::replace(&mut walls[bounds.index(next)], false) {
            open += 1;
        }
        cur = next;
    }
    let mut floors: Vec<Cell> = bounds.cells().filter(|c| !walls[bounds.index(*c)]).collect();
    if floors.len() < 2 * num_boxes + 2 {
        return None;
    }
    floors.shuffle(rng);
    let targets: Vec<Cell> = floors[..num_boxes].to_vec();
    let mut level = SokobanLevel {
        size,
        walls,
        targets,
        initial: SokobanState::new(Cell::new(0, 0), Vec::new()),
        seed,
    };
    let candidates: Vec<Cell> = floors[num_boxes..]
        .iter()
        .copied()
        .filter(|c| !level.is_dead_corner(*c))
        .collect();
    if candidates.len() < num_boxes + 1 {
        return None;
    }
    let boxes = candidates[..num_boxes].to_vec();
    let player = **floors
        .iter()
        .filter(|c| !boxes.contains(c))
        .collect::<Vec<_>>()
        .choose(rng)?;
    level.targets.sort_unstable();
    level.initial = SokobanState::new(player, boxes);
    level.validate().ok()?;
    Some(level)
}

/// Parses the character-grid form (`#` wall, space floor, `@` player,
/// `$` box, `.` target, `*` box on target, `+` player on target).
pub fn parse_level(rows: &[&str], seed: u64) -> Result<SokobanLevel> {
    let size = rows.len();
    if rows.iter().any(|r| r.chars().count() != size) {
        return Err(Error::InvalidSize("Sokoban grid must be square".into()));
    }
    let bounds = Bounds::square(size);
    let mut walls = vec![false; bounds.len()];
    let mut targets = Vec::new();
    let mut boxes = Vec::new();
    let mut player = None;
    for (r, row) in rows.iter().enumerate() {
        for (c, ch) in row.chars().enumerate() {
            let cell = Cell::new(r, c);
            match ch {
                '#' => walls[bounds.index(cell)] = true,
                ' ' | '-' | '_' => {}
                '@' => player = Some(cell),
                '+' => {
                    player = Some(cell);
                    targets.push(cell);
                }
                '$' => boxes.push(cell),
                '*' => {
                    boxes.push(cell);
                    targets.push(cell);
                }
                '.' => targets.push(cell),
                other => return Err(Error::InvalidArgument(format!("bad Sokoban character {other:?}"))),
            }
        }
    }
    let player = player.ok_or_else(|| Error::InvalidArgument("level has no player".into()))?;
    targets.sort_unstable();
    Ok(SokobanLevel {
        size,
        walls,
        targets,
        initial: SokobanState::new(player, boxes),
        seed,
    })
}

impl SokobanLevel {
    pub fn to_rows(&self) -> Vec<String> {
        let b = self.bounds();
        (0..b.rows)
            .map(|r| {
                (0..b.cols)
                    .map(|c| {
                        let cell = Cell::new(r, c);
                        let target = self.is_target(cell);
                        if self.is_wall(cell) {
                            '#'
                        } else if self.initial.player == cell {
                            if target {
                                '+'
                            } else {
                                '@'
                            }
                        } else if self.initial.has_box(cell) {
                            if target {
                                '*'
                            } else {
                                '$'
                            }
                        } else if target {
                            '.'
                        } else {
                            ' '
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct LevelText {
    size: usize,
    grid: Vec<String>,
    seed: u64,
}

impl From<SokobanLevel> for LevelText {
    fn from(l: SokobanLevel) -> Self {
        LevelText {
            size: l.size,
            grid: l.to_rows(),
            seed: l.seed,
        }
    }
}

impl TryFrom<LevelText> for SokobanLevel {
    type Error = Error;

    fn try_from(t: LevelText) -> Result<Self> {
        let rows: Vec<&str> = t.grid.iter().map(String::as_str).collect();
        let level = parse_level(&rows, t.seed)?;
        if level.size != t.size {
            return Err(Error::InvalidSize("declared size disagrees with grid".into()));
        }
        Ok(level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn corridor() -> SokobanLevel {
        parse_level(&["#####", "#@$.#", "#####", "#####", "#####"], 0).unwrap()
    }

    #[test]
    fn push_onto_target() {
        let l = corridor();
        let next = sokoban_step(&l, &l.initial, Action::R).unwrap();
        assert_eq!(next.player, Cell::new(1, 2));
        assert_eq!(next.boxes, vec![Cell::new(1, 3)]);
        assert!(l.is_goal(&next));
    }

    #[test]
    fn illegal_moves() {
        let l = corridor();
        assert!(matches!(
            sokoban_step(&l, &l.initial, Action::L),
            Err(Error::IllegalMove { .. })
        ));
        let two = parse_level(&["######", "#@$$.#", "######", "######", "######", "######"], 0).unwrap();
        assert!(sokoban_step(&two, &two.initial, Action::R).is_err());
        // Box against the outer wall cannot be pushed further.
        let wall = parse_level(&["#####", "# @$#", "#####", "#####", "#####"], 0);
        let wall = wall.unwrap();
        assert!(sokoban_step(&wall, &wall.initial, Action::R).is_err());
    }

    #[test]
    fn solve_small_cases() {
        let l = corridor();
        let sol = sokoban_solve(&l, DEFAULT_STATE_CAP).solution().unwrap();
        assert_eq!(sol.actions, vec![Action::R]);
        assert_eq!(sol.states.len(), 2);

        let done = parse_level(&["#####", "#@* #", "#####", "#####", "#####"], 0).unwrap();
        let sol = sokoban_solve(&done, DEFAULT_STATE_CAP).solution().unwrap();
        assert!(sol.actions.is_empty());

        let cornered = parse_level(&["######", "#$   #", "#  @ #", "#   .#", "######", "######"], 0).unwrap();
        assert!(cornered.is_dead_corner(Cell::new(1, 1)));
        assert!(matches!(
            sokoban_solve(&cornered, DEFAULT_STATE_CAP),
            SolveOutcome::Unsolvable { .. }
        ));
    }

    #[test]
    fn state_cap_is_respected() {
        let l = parse_level(
            &[
                "########", "#@     #", "#  $   #", "#      #", "#    . #", "#      #", "#      #",
                "########",
            ],
            0,
        )
        .unwrap();
        assert!(matches!(
            sokoban_solve(&l, 3),
            SolveOutcome::Unsolvable { expanded: 3 }
        ));
        assert!(sokoban_solve(&l, DEFAULT_STATE_CAP).solution().is_some());
    }

    #[test]
    fn level_text_round_trip() {
        let (level, _) = sokoban_generate(8, 2, 5, DEFAULT_STATE_CAP).unwrap();
        let json = serde_json::to_string(&level).unwrap();
        let back: SokobanLevel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, level);
    }

    #[test]
    fn generator_is_deterministic_and_valid() {
        for seed in 0..10 {
            let (a, sa) = sokoban_generate(6, 1, seed, DEFAULT_STATE_CAP).unwrap();
            let (b, _) = sokoban_generate(6, 1, seed, DEFAULT_STATE_CAP).unwrap();
            assert_eq!(a, b);
            a.validate().unwrap();
            let states = replay(&a, &sa.actions).unwrap();
            assert_eq!(&states, &sa.states);
            assert!(a.is_goal(states.last().unwrap()));
            assert!(sa.actions.len() <= MAX_SOLUTION_LEN);
            for b in &a.initial.boxes {
                assert!(!a.is_dead_corner(*b));
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(sokoban_generate(5, 1, 0, 10).is_err());
        assert!(sokoban_generate(6, 4, 0, 10).is_err());
    }

    /// Iterative deepening with a transposition table keyed on remaining depth.
    pub(crate) fn iddfs_min(level: &SokobanLevel, max_depth: usize) -> Option<usize> {
        fn dfs(
            level: &SokobanLevel,
            s: &SokobanState,
            left: usize,
            memo: &mut HashMap<SokobanState, usize>,
        ) -> bool {
            if level.is_goal(s) {
                return true;
            }
            if left == 0 {
                return false;
            }
            if memo.get(s).is_some_and(|&d| d >= left) {
                return false;
            }
            memo.insert(s.clone(), left);
            Action::ALL.iter().any(|&a| {
                sokoban_step(level, s, a)
                    .map(|n| dfs(level, &n, left - 1, memo))
                    .unwrap_or(false)
            })
        }
        (0..=max_depth).find(|&d| dfs(level, &level.initial, d, &mut HashMap::new()))
    }

    #[test]
    fn bfs_matches_iterative_deepening() {
        for seed in 0..50 {
            let (level, sol) = sokoban_generate(6, 1, seed, DEFAULT_STATE_CAP).unwrap();
            assert_eq!(iddfs_min(&level, 40), Some(sol.actions.len()), "seed {seed}");
        }
    }
}
