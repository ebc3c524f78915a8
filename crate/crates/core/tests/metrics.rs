use verigrid::domain::{domain, GenOptions};
use verigrid::grid::Action::*;
use verigrid::instance::{flow_initial_grid, TaskKind, Trajectory};
use verigrid::metrics::{f1_flowfree_cell, f1_maze_pixel, f1_sokoban_action, AlignmentLevel};
use verigrid::render::{render_states, render_trajectory};
use verigrid::report::score;

#[test]
fn action_f1_position_aligned() {
    let s = f1_sokoban_action(&[U, R, R], &[U, R, D]);
    assert_eq!(s.f1, 2.0 / 3.0);
    assert_eq!(s.level, AlignmentLevel::Action);
    // Out-of-order moves earn nothing even with the same multiset.
    let s = f1_sokoban_action(&[R, U], &[U, R]);
    assert_eq!(s.f1, 0.0);
    let s = f1_sokoban_action(&[U, R], &[U, R, D, D]);
    assert_eq!((s.precision, s.recall), (1.0, 0.5));
}

#[test]
fn maze_pixel_extra_quarter() {
    let inst = domain(TaskKind::Maze)
        .generate(
            "m".into(),
            4,
            &GenOptions {
                size: Some(11),
                ..GenOptions::default()
            },
        )
        .unwrap();
    let (board, sol) = inst.maze().unwrap();
    let gt = render_trajectory(&inst, inst.cell_px, None).unwrap();
    // Reference change mask: every painted path pixel except the start.
    let painted = sol.pixel_path.len() - 1;
    assert_eq!(painted % 4, 0, "choose a board whose path length divides by 4");
    let extra: Vec<_> = board
        .pixel_bounds()
        .cells()
        .filter(|c| board.is_wall(*c))
        .take(painted / 4)
        .collect();
    let mut path = sol.pixel_path.clone();
    path.extend(extra);
    let pred = render_states(&inst, &Trajectory::Maze(path), None).unwrap();
    let s = f1_maze_pixel(&pred, &gt).unwrap();
    assert!((s.precision - 0.8).abs() < 1e-12);
    assert_eq!(s.recall, 1.0);
    assert!((s.f1 - 2.0 * 0.8 / 1.8).abs() < 1e-12);
    let s = f1_maze_pixel(&gt.to_static(), &gt).unwrap();
    assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
}

#[test]
fn flow_cell_half_correct() {
    let inst = domain(TaskKind::FlowFree)
        .generate(
            "f".into(),
            2,
            &GenOptions {
                size: Some(6),
                ..GenOptions::default()
            },
        )
        .unwrap();
    let board = inst.flowfree().unwrap();
    let gt = render_trajectory(&inst, inst.cell_px, None).unwrap();
    let b = board.bounds();
    let gt_grid = verigrid::instance::flow_gt_grids(board).pop().unwrap();
    let mut half = vec![None; b.len()];
    half[..b.len() / 2].copy_from_slice(&gt_grid[..b.len() / 2]);
    let pred = render_states(&inst, &Trajectory::FlowFree(vec![half]), None).unwrap();
    let s = f1_flowfree_cell(&pred, &gt).unwrap();
    assert_eq!((s.precision, s.recall), (1.0, 0.5));
    assert_eq!(s.f1, 2.0 / 3.0);
    let empty = vec![None; b.len()];
    let _ = flow_initial_grid(board);
    let pred = render_states(&inst, &Trajectory::FlowFree(vec![empty]), None).unwrap();
    assert_eq!(f1_flowfree_cell(&pred, &gt).unwrap().f1, 0.0);
}

#[test]
fn self_score_is_perfect() {
    let seqs: Vec<_> = (0..30u64)
        .map(|i| {
            let task = TaskKind::ALL[i as usize % 3];
            let inst = domain(task)
                .generate(format!("i{i:03}"), i, &GenOptions::default())
                .unwrap();
            render_trajectory(&inst, inst.cell_px, None).unwrap()
        })
        .collect();
    let report = score(&seqs, &seqs).unwrap();
    for s in &report.summary {
        assert_eq!(
            (s.precision, s.recall, s.f1, s.success_rate),
            (100.0, 100.0, 100.0, 100.0)
        );
    }
    let statics: Vec<_> = seqs.iter().map(|s| s.to_static()).collect();
    let report = score(&statics, &seqs).unwrap();
    assert_eq!(report.summary_for(TaskKind::Maze).unwrap().success_rate, 0.0);
    assert!(score(&seqs[1..], &seqs).is_err());
    // Aggregates reproduce per-instance values.
    for s in &report.summary {
        let rows: Vec<_> = report.instances.iter().filter(|r| r.task == s.task).collect();
        let f1 = 100.0 * rows.iter().map(|r| r.alignment.f1).sum::<f64>() / rows.len() as f64;
        assert_eq!(f1, s.f1);
    }
}
