use std::fs;
use std::path::Path;
use std::process::Command;

use verigrid::dataset::{read_dataset, read_index, write_dataset, META_FILE};
use verigrid::domain::dispatch_reward;
use verigrid::TaskKind;
use verigrid_cli::{
    cmd_gen, cmd_score, cmd_train_toy, exit_code, GenArgs, ScoreArgs, TrainArgs, CHECKPOINT_FILE, CURVE_FILE,
    EXIT_DATA, EXIT_DIVERGED, EXIT_USAGE, METRICS_FILE,
};
use verigrid_rl::RlError;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_verigrid"))
}

fn gen_args(task: TaskKind, count: usize, seed: u64, out: &Path, jobs: usize) -> GenArgs {
    GenArgs {
        task,
        count,
        seed,
        out: out.to_path_buf(),
        jobs,
        size: None,
        boxes: None,
        colors: None,
        carve: None,
        theme: None,
        cell_px: 16,
    }
}

fn train_args(out: &Path) -> TrainArgs {
    TrainArgs {
        config: None,
        out: out.to_path_buf(),
        sparse_reward: false,
        beta: None,
        group_size: None,
        early_cutoff: None,
        iters: Some(4),
        seed: None,
    }
}

#[test]
fn gen_writes_verified_instances() {
    let dir = tempfile::tempdir().unwrap();
    let entries = cmd_gen(&gen_args(TaskKind::Maze, 20, 1, dir.path(), 2)).unwrap();
    assert_eq!(entries.len(), 20);
    let data = read_dataset(dir.path()).unwrap();
    assert_eq!(data.len(), 20);
    for seq in &data {
        let r = dispatch_reward(seq).unwrap();
        assert!(r.success && r.combined == 1.0, "{}", seq.meta.id);
    }
}

#[test]
fn gen_is_deterministic_across_job_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_gen(&gen_args(TaskKind::Sokoban, 10, 7, a.path(), 1)).unwrap();
    cmd_gen(&gen_args(TaskKind::Sokoban, 10, 7, b.path(), 3)).unwrap();
    let ids: Vec<String> = read_index(a.path()).unwrap().into_iter().map(|e| e.id).collect();
    assert_eq!(ids.len(), 10);
    for id in &ids {
        let ma = fs::read(a.path().join(id).join(META_FILE)).unwrap();
        let mb = fs::read(b.path().join(id).join(META_FILE)).unwrap();
        assert_eq!(ma, mb, "{id}");
    }
    assert_eq!(
        fs::read(a.path().join("index.jsonl")).unwrap(),
        fs::read(b.path().join("index.jsonl")).unwrap()
    );
}

#[test]
fn gen_zero_writes_empty_index() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["gen", "flowfree", "0", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(read_index(dir.path()).unwrap().is_empty());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["gen", "maze", "1", "--frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let out = bin()
        .args(["gen", "chess", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let out = bin()
        .args(["train-toy", "--group-size", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too small"));
}

#[test]
fn score_self_static_and_missing() {
    let root = tempfile::tempdir().unwrap();
    let data = root.path().join("data");
    for task in TaskKind::ALL {
        cmd_gen(&gen_args(task, 4, 2, &data, 0)).unwrap();
    }
    let args = |pred: &Path| ScoreArgs {
        pred: pred.to_path_buf(),
        reference: data.clone(),
        table: false,
        out: None,
    };
    let report = cmd_score(&args(&data)).unwrap();
    for s in &report.summary {
        assert_eq!(
            (s.precision, s.recall, s.f1, s.success_rate),
            (100.0, 100.0, 100.0, 100.0)
        );
    }
    let still = root.path().join("static");
    let seqs: Vec<_> = read_dataset(&data)
        .unwrap()
        .iter()
        .map(|s| s.to_static())
        .collect();
    write_dataset(&seqs, &still).unwrap();
    let report = cmd_score(&args(&still)).unwrap();
    assert_eq!(report.summary_for(TaskKind::Maze).unwrap().success_rate, 0.0);

    let partial = root.path().join("partial");
    write_dataset(&seqs[1..], &partial).unwrap();
    let out = bin().arg("score").arg(&partial).arg(&data).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_DATA));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mismatched manifest"));

    let out = bin()
        .arg("score")
        .arg(&data)
        .arg(&data)
        .arg("--table")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.starts_with("task"));
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn train_toy_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let curve = cmd_train_toy(&train_args(dir.path())).unwrap();
    assert_eq!(curve.len(), 4);
    let rows = fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
    assert_eq!(rows.lines().count(), 4);
    for f in [CURVE_FILE, CHECKPOINT_FILE, "config.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let model: verigrid_rl::ToyVelocityModel =
        serde_json::from_str(&fs::read_to_string(dir.path().join(CHECKPOINT_FILE)).unwrap()).unwrap();
    assert!(!model.params.is_empty());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"G": 8, "beta": 0.1, "iters": 2}"#).unwrap();
    let mut args = train_args(&dir.path().join("run"));
    args.config = Some(cfg);
    args.iters = None;
    args.sparse_reward = true;
    args.beta = Some(0.0);
    args.early_cutoff = Some(20);
    let resolved = verigrid_cli::resolve_train_config(&args).unwrap();
    assert_eq!(
        (resolved.group_size, resolved.iters, resolved.early_cutoff),
        (8, 2, 20)
    );
    assert_eq!(resolved.beta, 0.0);
    assert_eq!(resolved.reward_mode, verigrid::rewards::RewardMode::Sparse);
}

#[test]
fn cutoff_sweep_is_cheaper_early() {
    let dir = tempfile::tempdir().unwrap();
    let median = |cutoff: usize| {
        let mut args = train_args(&dir.path().join(format!("l{cutoff}")));
        args.early_cutoff = Some(cutoff);
        args.iters = Some(9);
        let mut ms: Vec<f64> = cmd_train_toy(&args).unwrap()[1..]
            .iter()
            .map(|m| m.wall_ms)
            .collect();
        ms.sort_by(f64::total_cmp);
        ms[ms.len() / 2]
    };
    let (l10, l20) = (median(10), median(20));
    assert!(l10 < l20, "{l10} ms vs {l20} ms");
}

#[test]
fn divergence_maps_to_exit_4() {
    let err = anyhow::Error::new(RlError::DivergedLoss {
        step: 3,
        loss: f64::NAN,
    });
    assert_eq!(exit_code(&err), EXIT_DIVERGED);
    let err = anyhow::Error::new(RlError::GroupTooSmall(1)).context("starting run");
    assert_eq!(exit_code(&err), EXIT_USAGE);
    let err = anyhow::Error::new(verigrid::Error::UnknownTask("x".into()));
    assert_eq!(exit_code(&err), EXIT_DATA);
}
