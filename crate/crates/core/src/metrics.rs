//! Precision/recall/F1 alignment against a reference trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Action;
use crate::render::{parse_flow_grid, Frame, FrameSequence};

/// Per-channel absolute difference (out of 255) above which a pixel counts
/// as changed.
pub const CHANGE_THRESHOLD: u8 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignmentLevel {
    Pixel,
    Cell,
    Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub level: AlignmentLevel,
}

impl AlignmentScore {
    pub fn from_counts(hits: usize, predicted: usize, reference: usize, level: AlignmentLevel) -> Self {
        let frac = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let mut score = Self::new(frac(hits, predicted), frac(hits, reference), level);
        // 2PR/(P+R) reduces to 2h/(p+r) on counts, which rounds only once.
        if predicted > 0 && reference > 0 {
            score.f1 = frac(2 * hits, predicted + reference);
        }
        score
    }

    pub fn new(precision: f64, recall: f64, level: AlignmentLevel) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
            level,
        }
    }
}

/// Pixels whose colour moved by more than [`CHANGE_THRESHOLD`] in any channel
/// between the two frames.
pub fn change_mask(initial: &Frame, last: &Frame) -> Result<Vec<bool>> {
    if initial.width != last.width || initial.height != last.height {
        return Err(Error::GeometryMismatch("frames differ in size".into()));
    }
    Ok(initial
        .rgb
        .chunks_exact(3)
        .zip(last.rgb.chunks_exact(3))
        .map(|(a, b)| a.iter().zip(b).any(|(x, y)| x.abs_diff(*y) > CHANGE_THRESHOLD))
        .collect())
}

/// Pixel-level alignment of the initial-to-final change masks.
pub fn f1_maze_pixel(pred: &FrameSequence, gt: &FrameSequence) -> Result<AlignmentScore> {
    let p = change_mask(pred.first(), pred.last())?;
    let g = change_mask(gt.first(), gt.last())?;
    if p.len() != g.len() {
        return Err(Error::GeometryMismatch(
            "prediction and reference differ in size".into(),
        ));
    }
    let hits = p.iter().zip(&g).filter(|(a, b)| **a && **b).count();
    let predicted = p.iter().filter(|a| **a).count();
    let reference = g.iter().filter(|a| **a).count();
    Ok(AlignmentScore::from_counts(
        hits,
        predicted,
        reference,
        AlignmentLevel::Pixel,
    ))
}

/// Cell-level alignment of final-frame flow colours.
pub fn f1_flowfree_cell(pred: &FrameSequence, gt: &FrameSequence) -> Result<AlignmentScore> {
    let p = parse_flow_grid(pred.last(), &gt.meta)?;
    let g = parse_flow_grid(gt.last(), &gt.meta)?;
    let hits = p.iter().zip(&g).filter(|(a, b)| a.is_some() && a == b).count();
    let predicted = p.iter().filter(|a| a.is_some()).count();
    let reference = g.iter().filter(|a| a.is_some()).count();
    Ok(AlignmentScore::from_counts(
        hits,
        predicted,
        reference,
        AlignmentLevel::Cell,
    ))
}

/// Position-aligned action F1: index-wise matches over the shorter length,
/// divided by the full lengths.
pub fn f1_sokoban_action(pred: &[Action], gt: &[Action]) -> AlignmentScore {
    let hits = pred.iter().zip(gt).filter(|(a, b)| a == b).count();
    AlignmentScore::from_counts(hits, pred.len(), gt.len(), AlignmentLevel::Action)
}
