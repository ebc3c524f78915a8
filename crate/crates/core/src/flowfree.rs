//! FlowFree synthesis: a Warnsdorff Hamiltonian path cut into coloured flows.

use rand::seq::{index, IndexedRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Bounds, Cell};
use crate::rng::SeededRng;

pub const RESTART_BUDGET: usize = 128;
pub const DATASET_SIZES: std::ops::RangeInclusive<usize> = 5..=8;
pub const MAX_COLORS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowBoard {
    pub n: usize,
    pub num_colors: usize,
    /// Per colour, the two endpoint cells in path order.
    pub endpoints: Vec<[Cell; 2]>,
    /// Per colour, the ground-truth flow from `endpoints[i][0]` to `endpoints[i][1]`.
    pub segments: Vec<Vec<Cell>>,
    pub seed: u64,
}

impl FlowBoard {
    pub fn bounds(&self) -> Bounds {
        Bounds::square(self.n)
    }

    /// Colour whose endpoint sits on `c`, if any.
    pub fn endpoint_color(&self, c: Cell) -> Option<usize> {
        self.endpoints.iter().position(|e| e.contains(&c))
    }

    /// Checks every structural invariant of a generated board.
    pub fn validate(&self) -> Result<()> {
        let bounds = self.bounds();
        if self.segments.len() != self.num_colors || self.endpoints.len() != self.num_colors {
            return Err(Error::InvalidArgument("colour count mismatch".into()));
        }
        let mut seen = vec![false; bounds.len()];
        for (seg, ends) in self.segments.iter().zip(&self.endpoints) {
            if seg.len() < 2 {
                return Err(Error::InvalidArgument("segment shorter than two cells".into()));
            }
            if seg[0] != ends[0] || seg[seg.len() - 1] != ends[1] {
                return Err(Error::InvalidArgument("segment endpoints disagree".into()));
            }
            for &c in seg {
                if !bounds.contains(c) || std::mem::replace(&mut seen[bounds.index(c)], true) {
                    return Err(Error::InvalidArgument(format!(
                        "cell {c} reused or out of bounds"
                    )));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("segments do not cover the grid".into()));
        }
        let whole: Vec<Cell> = self.segments.concat();
        if whole.windows(2).any(|w| !w[0].is_adjacent(w[1])) {
            return Err(Error::InvalidArgument(
                "segments are not one Hamiltonian path".into(),
            ));
        }
        Ok(())
    }
}

/// Warnsdorff search: always step to the unvisited neighbour with the fewest
/// unvisited onward moves, breaking ties at random; restarts on dead ends.
pub fn hamiltonian_path(n: usize, seed: u64) -> Result<Vec<Cell>> {
    if n == 0 {
        return Err(Error::InvalidSize("Hamiltonian path needs n >= 1".into()));
    }
    let bounds = Bounds::square(n);
    let mut rng = SeededRng::new(seed).child("warnsdorff");
    for _ in 0..RESTART_BUDGET {
        if let Some(path) = warnsdorff_attempt(bounds, &mut rng) {
            return Ok(path);
        }
    }
    Err(Error::GenerationExhausted {
        attempts: RESTART_BUDGET,
        seed,
    })
}

fn warnsdorff_attempt(bounds: Bounds, rng: &mut SeededRng) -> Option<Vec<Cell>> {
    let total = bounds.len();
    // On odd boards a Hamiltonian path must start on the majority colour.
    let starts: Vec<Cell> = bounds
        .cells()
        .filter(|c| total.is_multiple_of(2) || (c.row + c.col).is_multiple_of(2))
        .collect();
    let mut cur = *starts.choose(rng)?;
    let mut visited = vec![false; total];
    visited[bounds.index(cur)] = true;
    let mut path = Vec::with_capacity(total);
    path.push(cur);
    let onward = |c: Cell, visited: &[bool]| {
        c.neighbors(bounds)
            .filter(|(_, o)| !visited[bounds.index(*o)])
            .count()
    };
    while path.len() < total {
        let options: Vec<(Cell, usize)> = cur
            .neighbors(bounds)
            .map(|(_, o)| o)
            .filter(|o| !visited[bounds.index(*o)])
            .map(|o| (o, onward(o, &visited)))
            .collect();
        let best = options.iter().map(|&(_, d)| d).min()?;
        let ties: Vec<Cell> = options
            .into_iter()
            .filter(|&(_, d)| d == best)
            .map(|(c, _)| c)
            .collect();
        cur = *ties.choose(rng)?;
        visited[bounds.index(cur)] = true;
        path.push(cur);
    }
    Some(path)
}

/// Cuts `path` into `k` contiguous flows of at least two cells, choosing the
/// composition uniformly among all valid ones.
pub fn split_into_flows(path: &[Cell], k: usize, seed: u64) -> Result<FlowBoard> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one colour".into()));
    }
    if 2 * k > path.len() {
        return Err(Error::TooManyColors {
            colors: k,
            needed: 2 * k,
            available: path.len(),
        });
    }
    let n = (path.len() as f64).sqrt().round() as usize;
    if n * n != path.len() {
        return Err(Error::InvalidSize(format!(
            "path of {} cells is not square",
            path.len()
        )));
    }
    let mut rng = SeededRng::new(seed).child("split");
    let lengths = sample_composition(path.len(), k, &mut rng);
    let mut segments = Vec::with_capacity(k);
    let mut at = 0;
    for len in lengths {
        segments.push(path[at..at + len].to_vec());
        at += len;
    }
    let endpoints = segments.iter().map(|s| [s[0], s[s.len() - 1]]).collect();
    Ok(FlowBoard {
        n,
        num_colors: k,
        endpoints,
        segments,
        seed,
    })
}

/// Uniform composition of `total` into `k` parts, each at least 2
/// (stars and bars over the `total - 2k` spare cells).
pub fn sample_composition(total: usize, k: usize, rng: &mut SeededRng) -> Vec<usize> {
    let spare = total - 2 * k;
    let slots = spare + k - 1;
    let mut bars = index::sample(rng, slots, k - 1).into_vec();
    bars.sort_unstable();
    let mut parts = Vec::with_capacity(k);
    let mut prev: isize = -1;
    for &b in &bars {
        parts.push((b as isize - prev - 1) as usize + 2);
        prev = b as isize;
    }
    parts.push((slots as isize - prev - 1) as usize + 2);
    parts
}

/// Inclusive colour-count range for an `n x n` board.
pub fn color_range(n: usize) -> (usize, usize) {
    let cells = n * n;
    let lo = (cells / 10).max(2);
    let hi = (cells / 3).min(MAX_COLORS);
    (lo, hi.max(lo))
}

pub fn flowfree_generate(n: usize, seed: u64) -> Result<FlowBoard> {
    if n < 2 {
        return Err(Error::InvalidSize(format!(
            "FlowFree board needs n >= 2, got {n}"
        )));
    }
    let path = hamiltonian_path(n, seed)?;
    let (lo, hi) = color_range(n);
    let k = SeededRng::new(seed).child("colors").random_range(lo..=hi);
    split_into_flows(&path, k, seed)
}
