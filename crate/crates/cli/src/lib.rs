//! Subcommands behind the `verigrid` binary, callable in-process.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use verigrid::batch::generate_verified;
use verigrid::dataset::{index_entry, merge_index, read_dataset, write_instance, IndexEntry};
use verigrid::domain::{GenOptions, DEFAULT_CELL_PX};
use verigrid::maze::CarveAlgorithm;
use verigrid::report::{score, ScoreReport};
use verigrid::rewards::RewardMode;
use verigrid::TaskKind;
use verigrid_rl::train::{run_toy, EvalReport, IterMetrics};
use verigrid_rl::{RlError, TrainConfig};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "verigrid",
    version,
    about = "Generate, score and train on rule-verified grid puzzle videos"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Generate verified instances with their solution renders.
    Gen(GenArgs),
    /// Score predicted videos against a reference dataset.
    Score(ScoreArgs),
    /// Fit the toy policy, then train it against the verifiers.
    TrainToy(TrainArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    pub task: TaskKind,
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub boxes: Option<usize>,
    #[arg(long)]
    pub colors: Option<usize>,
    #[arg(long)]
    pub carve: Option<CarveAlgorithm>,
    #[arg(long)]
    pub theme: Option<String>,
    #[arg(long, default_value_t = DEFAULT_CELL_PX)]
    pub cell_px: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    pub pred: PathBuf,
    pub reference: PathBuf,
    /// Print the aggregate table instead of JSON.
    #[arg(long)]
    pub table: bool,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// JSON training config; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub sparse_reward: bool,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub group_size: Option<usize>,
    #[arg(long)]
    pub early_cutoff: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Process exit code for a failed run.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<RlError>() {
            return match e {
                RlError::DivergedLoss { .. } | RlError::NonFiniteRatio(_) => EXIT_DIVERGED,
                RlError::GroupTooSmall(_) | RlError::InvalidConfig(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            };
        }
        if cause.downcast_ref::<clap::Error>().is_some() {
            return EXIT_USAGE;
        }
    }
    EXIT_DATA
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    log::info!("resolved arguments: {}", serde_json::to_string(cli)?);
    match &cli.command {
        Command::Gen(a) => cmd_gen(a).map(|_| ()),
        Command::Score(a) => {
            let report = cmd_score(a)?;
            let mut out = std::io::stdout().lock();
            if a.table {
                write!(out, "{}", report.table())?;
            } else {
                writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
            }
            Ok(())
        }
        Command::TrainToy(a) => cmd_train_toy(a).map(|_| ()),
    }
}

fn pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// Generates, verifies and writes `count` instances, then merges them into
/// the index. Returns the new index entries sorted by id.
pub fn cmd_gen(a: &GenArgs) -> anyhow::Result<Vec<IndexEntry>> {
    let opts = GenOptions {
        size: a.size,
        boxes: a.boxes,
        colors: a.colors,
        carve: a.carve,
        theme: a.theme.clone(),
        cell_px: a.cell_px,
        ..GenOptions::default()
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let entries = pool(a.jobs)?.install(|| {
        (0..a.count)
            .into_par_iter()
            .map(|i| {
                let seq = generate_verified(a.task, a.seed, i, &opts)?;
                write_instance(&a.out, &seq)?;
                Ok(index_entry(&seq))
            })
            .collect::<verigrid::Result<Vec<_>>>()
    })?;
    merge_index(&a.out, entries.clone())?;
    log::info!(
        "wrote {} {} instances to {}",
        entries.len(),
        a.task,
        a.out.display()
    );
    Ok(entries)
}

pub fn cmd_score(a: &ScoreArgs) -> anyhow::Result<ScoreReport> {
    let preds = read_dataset(&a.pred).with_context(|| format!("reading {}", a.pred.display()))?;
    let refs = read_dataset(&a.reference).with_context(|| format!("reading {}", a.reference.display()))?;
    let report = score(&preds, &refs)?;
    if let Some(path) = &a.out {
        fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}

/// Saved next to the metrics log.
#[derive(Debug, Serialize)]
pub struct RewardCurve {
    pub baseline: EvalReport,
    pub final_eval: EvalReport,
    pub mean_reward: Vec<f64>,
}

pub const CONFIG_FILE: &str = "config.json";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const CURVE_FILE: &str = "curve.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

pub fn resolve_train_config(a: &TrainArgs) -> anyhow::Result<TrainConfig> {
    let mut cfg: TrainConfig = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => TrainConfig::default(),
    };
    if a.sparse_reward {
        cfg.reward_mode = RewardMode::Sparse;
    }
    if let Some(b) = a.beta {
        cfg.beta = b;
    }
    if let Some(g) = a.group_size {
        cfg.group_size = g;
    }
    if let Some(l) = a.early_cutoff {
        cfg.early_cutoff = l;
    }
    if let Some(n) = a.iters {
        cfg.iters = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_train_toy(a: &TrainArgs) -> anyhow::Result<Vec<IterMetrics>> {
    let cfg = resolve_train_config(a)?;
    log::info!("training config: {}", serde_json::to_string(&cfg)?);
    if cfg.beta == 0.0 {
        log::warn!("KL penalty disabled (beta = 0)");
    }
    write_run(&cfg, &a.out)
}

fn write_run(cfg: &TrainConfig, out: &Path) -> anyhow::Result<Vec<IterMetrics>> {
    fs::create_dir_all(out)?;
    fs::write(out.join(CONFIG_FILE), serde_json::to_string_pretty(cfg)?)?;
    let mut log_file = std::io::BufWriter::new(fs::File::create(out.join(METRICS_FILE))?);
    let run = run_toy(cfg, Some(&mut log_file))?;
    log_file.flush()?;
    let curve = RewardCurve {
        baseline: run.baseline,
        final_eval: run.final_eval,
        mean_reward: run.curve.iter().map(|m| m.mean_reward).collect(),
    };
    fs::write(out.join(CURVE_FILE), serde_json::to_string_pretty(&curve)?)?;
    fs::write(out.join(CHECKPOINT_FILE), serde_json::to_string(&run.trained)?)?;
    log::info!(
        "mean reward {:.4} -> {:.4}, success {:.3} -> {:.3}",
        run.baseline.mean_reward,
        run.final_eval.mean_reward,
        run.baseline.success_rate,
        run.final_eval.success_rate
    );
    if run.curve.len() != cfg.iters {
        bail!("expected {} metric rows, got {}", cfg.iters, run.curve.len());
    }
    Ok(run.curve)
}
