//! Scoring a directory of predicted videos against a reference dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domain::domain;
use crate::error::{Error, Result};
use crate::instance::TaskKind;
use crate::metrics::AlignmentScore;
use crate::render::FrameSequence;
use crate::rewards::RewardBreakdown;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub id: String,
    pub task: TaskKind,
    /// Absent when the predicted frames could not be parsed.
    pub reward: Option<RewardBreakdown>,
    pub alignment: AlignmentScore,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
}

/// Aggregates in percent, matching the usual Prec/Rec/F1/SR table layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task: TaskKind,
    pub count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub success_rate: f64,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub instances: Vec<InstanceScore>,
    pub summary: Vec<TaskSummary>,
}

/// Scores one prediction. The reference metadata is authoritative: the
/// prediction's own metadata only has to agree on id and task.
pub fn score_instance(pred: &FrameSequence, reference: &FrameSequence) -> Result<InstanceScore> {
    let meta = &reference.meta;
    if pred.meta.id != meta.id || pred.meta.task() != meta.task() {
        return Err(Error::MismatchedManifest(format!(
            "prediction {} ({}) does not match reference {} ({})",
            pred.meta.id,
            pred.meta.task().name(),
            meta.id,
            meta.task().name()
        )));
    }
    let pred = FrameSequence {
        frames: pred.frames.clone(),
        meta: meta.clone(),
    };
    let dom = domain(meta.task());
    let (reward, diagnostic) = match dom.reward(&pred) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let alignment = match dom.alignment(&pred, reference) {
        Ok(a) => a,
        Err(e) => {
            let zero = AlignmentScore::from_counts(0, 0, 0, level_of(meta.task()));
            return Ok(InstanceScore {
                id: meta.id.clone(),
                task: meta.task(),
                success: reward.as_ref().is_some_and(|r| r.success),
                reward,
                alignment: zero,
                diagnostic: diagnostic.or(Some(e.to_string())),
            });
        }
    };
    Ok(InstanceScore {
        id: meta.id.clone(),
        task: meta.task(),
        success: reward.as_ref().is_some_and(|r| r.success),
        reward,
        alignment,
        diagnostic,
    })
}

fn level_of(task: TaskKind) -> crate::metrics::AlignmentLevel {
    use crate::metrics::AlignmentLevel::*;
    match task {
        TaskKind::Maze => Pixel,
        TaskKind::FlowFree => Cell,
        TaskKind::Sokoban => Action,
    }
}

/// Pairs predictions with references by id. Both sets must be identical.
pub fn score(preds: &[FrameSequence], refs: &[FrameSequence]) -> Result<ScoreReport> {
    let pred_ids: BTreeSet<&str> = preds.iter().map(|s| s.meta.id.as_str()).collect();
    let ref_ids: BTreeSet<&str> = refs.iter().map(|s| s.meta.id.as_str()).collect();
    if pred_ids != ref_ids || pred_ids.len() != preds.len() || ref_ids.len() != refs.len() {
        let missing: Vec<_> = ref_ids.difference(&pred_ids).collect();
        let extra: Vec<_> = pred_ids.difference(&ref_ids).collect();
        return Err(Error::MismatchedManifest(format!(
            "missing predictions {missing:?}, unexpected predictions {extra:?}"
        )));
    }
    let by_id: BTreeMap<&str, &FrameSequence> = preds.iter().map(|s| (s.meta.id.as_str(), s)).collect();
    let mut refs: Vec<&FrameSequence> = refs.iter().collect();
    refs.sort_by(|a, b| a.meta.id.cmp(&b.meta.id));
    let instances = refs
        .iter()
        .map(|r| score_instance(by_id[r.meta.id.as_str()], r))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreReport {
        summary: summarize(&instances),
        instances,
    })
}

pub fn summarize(instances: &[InstanceScore]) -> Vec<TaskSummary> {
    [TaskKind::Maze, TaskKind::FlowFree, TaskKind::Sokoban]
        .into_iter()
        .filter_map(|task| {
            let rows: Vec<&InstanceScore> = instances.iter().filter(|s| s.task == task).collect();
            if rows.is_empty() {
                return None;
            }
            let n = rows.len() as f64;
            let mean = |f: &dyn Fn(&InstanceScore) -> f64| rows.iter().map(|s| f(s)).sum::<f64>() / n;
            Some(TaskSummary {
                task,
                count: rows.len(),
                precision: 100.0 * mean(&|s| s.alignment.precision),
                recall: 100.0 * mean(&|s| s.alignment.recall),
                f1: 100.0 * mean(&|s| s.alignment.f1),
                success_rate: 100.0 * mean(&|s| if s.success { 1.0 } else { 0.0 }),
                mean_reward: mean(&|s| s.reward.as_ref().map_or(0.0, |r| r.combined)),
            })
        })
        .collect()
}

impl ScoreReport {
    pub fn summary_for(&self, task: TaskKind) -> Option<&TaskSummary> {
        self.summary.iter().find(|s| s.task == task)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>7} {:>7} {:>7} {:>7} {:>8}",
            "task", "n", "Prec", "Rec", "F1", "SR", "reward"
        );
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{:<10} {:>6} {:>7.1} {:>7.1} {:>7.1} {:>7.1} {:>8.4}",
                s.task.name(),
                s.count,
                s.precision,
                s.recall,
                s.f1,
                s.success_rate,
                s.mean_reward
            );
        }
        out
    }
}
