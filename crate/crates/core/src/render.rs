//! Rasterising symbolic trajectories and parsing frames back.
//!
//! Every board cell becomes a `cell_px x cell_px` block. Parsing averages the
//! central half of each block and snaps the mean to the nearest palette
//! colour, or `Unknown` when nothing is within [`COLOR_TOLERANCE`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Action, Bounds, Cell};
use crate::instance::{FlowGrid, Payload, TaskInstance, TaskKind, Trajectory};
use crate::maze::MazeBoard;
use crate::palette::{to_f64, ColorRole, Palette, Rgb};
use crate::sokoban::{SokobanLevel, SokobanState};

pub const COLOR_TOLERANCE: f64 = 60.0;
pub const MIN_CELL_PX: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB triples.
    pub rgb: Vec<u8>,
}

impl Frame {
    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        let mut rgb = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            rgb.extend_from_slice(&color);
        }
        Self { width, height, rgb }
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn fill_rect(&mut self, x0: usize, y0: usize, w: usize, h: usize, color: Rgb) {
        for y in y0..(y0 + h).min(self.height) {
            for x in x0..(x0 + w).min(self.width) {
                let i = 3 * (y * self.width + x);
                self.rgb[i..i + 3].copy_from_slice(&color);
            }
        }
    }

    /// Mean colour of the central half of the block for `cell`.
    pub fn cell_mean(&self, cell: Cell, cell_px: usize) -> [f64; 3] {
        let inset = cell_px / 4;
        let span = (cell_px / 2).max(1);
        let (x0, y0) = (cell.col * cell_px + inset, cell.row * cell_px + inset);
        let mut sum = [0.0f64; 3];
        for y in y0..y0 + span {
            for x in x0..x0 + span {
                let p = self.pixel(x, y);
                for k in 0..3 {
                    sum[k] += f64::from(p[k]);
                }
            }
        }
        let n = (span * span) as f64;
        sum.map(|s| s / n)
    }
}

/// Frames plus the instance they depict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSequence {
    pub frames: Vec<Frame>,
    pub meta: TaskInstance,
}

impl FrameSequence {
    pub fn first(&self) -> &Frame {
        &self.frames[0]
    }

    pub fn last(&self) -> &Frame {
        self.frames.last().expect("sequences hold at least one frame")
    }

    /// Copy whose every frame equals the first one.
    pub fn to_static(&self) -> FrameSequence {
        FrameSequence {
            frames: vec![self.frames[0].clone(); self.frames.len()],
            meta: self.meta.clone(),
        }
    }
}

/// Renders the instance's ground-truth trajectory.
pub fn render_trajectory(
    instance: &TaskInstance,
    cell_px: usize,
    pad_to: Option<usize>,
) -> Result<FrameSequence> {
    let mut meta = instance.clone();
    meta.cell_px = cell_px;
    render_states(&meta, &instance.gt_trajectory(), pad_to)
}

/// Renders an arbitrary symbolic trajectory on the instance's board, using
/// `instance.cell_px`.
pub fn render_states(
    instance: &TaskInstance,
    trajectory: &Trajectory,
    pad_to: Option<usize>,
) -> Result<FrameSequence> {
    let cell_px = instance.cell_px;
    if cell_px < MIN_CELL_PX {
        return Err(Error::InvalidArgument(format!(
            "cell_px must be >= {MIN_CELL_PX}"
        )));
    }
    let mut frames: Vec<Frame> = match (&instance.payload, trajectory) {
        (Payload::Maze { board, .. }, Trajectory::Maze(path)) => {
            render_maze(board, path, &instance.palette, cell_px)
        }
        (Payload::FlowFree { board }, Trajectory::FlowFree(grids)) => grids
            .iter()
            .map(|g| render_flow(board.n, g, &instance.palette, cell_px))
            .collect(),
        (Payload::Sokoban { level, .. }, Trajectory::Sokoban(states)) => states
            .iter()
            .map(|s| render_sokoban(level, s, &instance.palette, cell_px))
            .collect(),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "trajectory does not match a {} instance",
                instance.task()
            )))
        }
    };
    if frames.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    if let Some(pad) = pad_to {
        if pad < frames.len() {
            return Err(Error::PadTooSmall {
                pad_to: pad,
                frames: frames.len(),
            });
        }
        let last = frames.last().cloned().expect("non-empty");
        frames.resize(pad, last);
    }
    Ok(FrameSequence {
        frames,
        meta: instance.clone(),
    })
}

fn paint_cell(frame: &mut Frame, cell: Cell, cell_px: usize, color: Rgb) {
    frame.fill_rect(cell.col * cell_px, cell.row * cell_px, cell_px, cell_px, color);
}

fn paint_token(frame: &mut Frame, cell: Cell, cell_px: usize, color: Rgb) {
    let inset = cell_px / 8;
    frame.fill_rect(
        cell.col * cell_px + inset,
        cell.row * cell_px + inset,
        cell_px - 2 * inset,
        cell_px - 2 * inset,
        color,
    );
}

fn maze_base(board: &MazeBoard, palette: &Palette, cell_px: usize) -> Frame {
    let side = board.n * cell_px;
    let mut f = Frame::filled(side, side, palette.floor);
    for c in board.pixel_bounds().cells() {
        if board.is_wall(c) {
            paint_cell(&mut f, c, cell_px, palette.wall);
        }
    }
    paint_cell(&mut f, board.start_pixel(), cell_px, palette.start_marker);
    paint_cell(&mut f, board.goal_pixel(), cell_px, palette.goal_marker);
    f
}

fn render_maze(board: &MazeBoard, path: &[Cell], palette: &Palette, cell_px: usize) -> Vec<Frame> {
    let mut frame = maze_base(board, palette, cell_px);
    let mut frames = vec![frame.clone()];
    let start = board.start_pixel();
    for &c in path.iter().skip(1) {
        if c != start && board.pixel_bounds().contains(c) {
            paint_cell(&mut frame, c, cell_px, palette.path);
        }
        frames.push(frame.clone());
    }
    frames
}

fn render_flow(n: usize, grid: &FlowGrid, palette: &Palette, cell_px: usize) -> Frame {
    let side = n * cell_px;
    let mut f = Frame::filled(side, side, palette.wall);
    let b = Bounds::square(n);
    for c in b.cells() {
        let color = match grid[b.index(c)] {
            Some(i) => palette.flow[i % palette.flow.len()],
            None => palette.background,
        };
        // One-pixel grid lines in the wall colour.
        f.fill_rect(
            c.col * cell_px + 1,
            c.row * cell_px + 1,
            cell_px - 2,
            cell_px - 2,
            color,
        );
    }
    f
}

fn render_sokoban(level: &SokobanLevel, s: &SokobanState, palette: &Palette, cell_px: usize) -> Frame {
    let side = level.size * cell_px;
    let mut f = Frame::filled(side, side, palette.floor);
    for c in level.bounds().cells() {
        if level.is_wall(c) {
            paint_cell(&mut f, c, cell_px, palette.wall);
        } else if level.is_target(c) {
            paint_cell(&mut f, c, cell_px, palette.target);
        }
    }
    for b in &s.boxes {
        paint_token(&mut f, *b, cell_px, palette.box_);
    }
    paint_token(&mut f, s.player, cell_px, palette.player);
    f
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MazeClass {
    Wall,
    Floor,
    Path,
    Start,
    Goal,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowClass {
    Empty,
    Color(usize),
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SokobanClass {
    Wall,
    Floor,
    Target,
    Box,
    Player,
    Unknown,
}

/// Per-cell classification of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedFrame {
    Maze(Vec<MazeClass>),
    FlowFree(Vec<FlowClass>),
    Sokoban(Vec<SokobanClass>),
}

fn classify(frame: &Frame, bounds: Bounds, cell_px: usize, palette: &Palette) -> Vec<Option<ColorRole>> {
    bounds
        .cells()
        .map(|c| {
            palette
                .nearest(frame.cell_mean(c, cell_px), palette.roles())
                .filter(|(_, d)| *d <= COLOR_TOLERANCE)
                .map(|(role, _)| role)
        })
        .collect()
}

pub fn check_geometry(frame: &Frame, meta: &TaskInstance) -> Result<()> {
    let b = meta.grid_bounds();
    let (w, h) = (b.cols * meta.cell_px, b.rows * meta.cell_px);
    if frame.width != w || frame.height != h || frame.rgb.len() != w * h * 3 {
        return Err(Error::GeometryMismatch(format!(
            "frame is {}x{} ({} bytes), {} board at cell_px {} needs {w}x{h}",
            frame.width,
            frame.height,
            frame.rgb.len(),
            meta.task(),
            meta.cell_px
        )));
    }
    Ok(())
}

pub fn parse_frame(frame: &Frame, meta: &TaskInstance) -> Result<ParsedFrame> {
    check_geometry(frame, meta)?;
    let roles = classify(frame, meta.grid_bounds(), meta.cell_px, &meta.palette);
    Ok(match meta.task() {
        TaskKind::Maze => ParsedFrame::Maze(
            roles
                .into_iter()
                .map(|r| match r {
                    Some(ColorRole::Wall) => MazeClass::Wall,
                    Some(ColorRole::Floor) => MazeClass::Floor,
                    Some(ColorRole::Path) => MazeClass::Path,
                    Some(ColorRole::Start) => MazeClass::Start,
                    Some(ColorRole::Goal) => MazeClass::Goal,
                    _ => MazeClass::Unknown,
                })
                .collect(),
        ),
        TaskKind::FlowFree => {
            let k = meta.flowfree().map_or(0, |b| b.num_colors);
            ParsedFrame::FlowFree(
                roles
                    .into_iter()
                    .map(|r| match r {
                        Some(ColorRole::Background) => FlowClass::Empty,
                        Some(ColorRole::Flow(i)) if i < k => FlowClass::Color(i),
                        _ => FlowClass::Unknown,
                    })
                    .collect(),
            )
        }
        TaskKind::Sokoban => ParsedFrame::Sokoban(
            roles
                .into_iter()
                .map(|r| match r {
                    Some(ColorRole::Wall) => SokobanClass::Wall,
                    Some(ColorRole::Floor) => SokobanClass::Floor,
                    Some(ColorRole::Target) => SokobanClass::Target,
                    Some(ColorRole::Box) => SokobanClass::Box,
                    Some(ColorRole::Player) => SokobanClass::Player,
                    _ => SokobanClass::Unknown,
                })
                .collect(),
        ),
    })
}

/// Painted maze pixels (cells classified as path) in a frame.
pub fn parse_maze_painted(frame: &Frame, meta: &TaskInstance) -> Result<Vec<bool>> {
    match parse_frame(frame, meta)? {
        ParsedFrame::Maze(classes) => Ok(classes.iter().map(|c| *c == MazeClass::Path).collect()),
        _ => Err(Error::UnparsableFrame("not a maze frame".into())),
    }
}

/// Flow colour per cell; empty and unknown cells map to `None`.
pub fn parse_flow_grid(frame: &Frame, meta: &TaskInstance) -> Result<FlowGrid> {
    match parse_frame(frame, meta)? {
        ParsedFrame::FlowFree(classes) => Ok(classes
            .iter()
            .map(|c| match c {
                FlowClass::Color(i) => Some(*i),
                _ => None,
            })
            .collect()),
        _ => Err(Error::UnparsableFrame("not a FlowFree frame".into())),
    }
}

/// Player and box cells of a Sokoban frame. Exactly one player is required.
pub fn parse_sokoban_state(frame: &Frame, meta: &TaskInstance) -> Result<SokobanState> {
    let ParsedFrame::Sokoban(classes) = parse_frame(frame, meta)? else {
        return Err(Error::UnparsableFrame("not a Sokoban frame".into()));
    };
    let b = meta.grid_bounds();
    let players: Vec<Cell> = b
        .cells()
        .filter(|c| classes[b.index(*c)] == SokobanClass::Player)
        .collect();
    let boxes: Vec<Cell> = b
        .cells()
        .filter(|c| classes[b.index(*c)] == SokobanClass::Box)
        .collect();
    match players.as_slice() {
        [p] => Ok(SokobanState::new(*p, boxes)),
        _ => Err(Error::UnparsableFrame(format!(
            "expected one player, found {}",
            players.len()
        ))),
    }
}

/// Reads the single moved entity off each transition. Identity transitions
/// are skipped.
pub fn decode_actions(seq: &FrameSequence) -> Result<Vec<Action>> {
    decode(seq, true)
}

/// Like [`decode_actions`], but transitions that no single action explains
/// are dropped instead of failing the whole sequence.
pub fn decode_actions_lenient(seq: &FrameSequence) -> Result<Vec<Action>> {
    decode(seq, false)
}

fn decode(seq: &FrameSequence, strict: bool) -> Result<Vec<Action>> {
    let meta = &seq.meta;
    let mut actions = Vec::new();
    match &meta.payload {
        Payload::Sokoban { .. } => {
            let states = seq
                .frames
                .iter()
                .map(|f| parse_sokoban_state(f, meta))
                .collect::<Result<Vec<_>>>()?;
            for (i, w) in states.windows(2).enumerate() {
                if w[0] == w[1] {
                    continue;
                }
                match Action::between(w[0].player, w[1].player) {
                    Some(a) => actions.push(a),
                    None if strict => return Err(Error::AmbiguousTransition(i)),
                    None => {}
                }
            }
        }
        Payload::Maze { board, .. } => {
            let painted = seq
                .frames
                .iter()
                .map(|f| parse_maze_painted(f, meta))
                .collect::<Result<Vec<_>>>()?;
            let bounds = board.pixel_bounds();
            let mut head = board.start_pixel();
            for (i, w) in painted.windows(2).enumerate() {
                let fresh: Vec<Cell> = bounds
                    .cells()
                    .filter(|c| w[1][bounds.index(*c)] && !w[0][bounds.index(*c)])
                    .collect();
                match fresh.as_slice() {
                    [] => {}
                    [p] => match Action::between(head, *p) {
                        Some(a) => {
                            actions.push(a);
                            head = *p;
                        }
                        None if strict => return Err(Error::AmbiguousTransition(i)),
                        None => head = *p,
                    },
                    _ if strict => return Err(Error::AmbiguousTransition(i)),
                    _ => {}
                }
            }
        }
        Payload::FlowFree { .. } => {
            return Err(Error::InvalidArgument(
                "action decoding applies to maze and sokoban sequences".into(),
            ))
        }
    }
    Ok(actions)
}

/// Mean colour of each cell, exposed for diagnostics and tests.
pub fn cell_means(frame: &Frame, bounds: Bounds, cell_px: usize) -> Vec<[f64; 3]> {
    bounds.cells().map(|c| frame.cell_mean(c, cell_px)).collect()
}

pub fn palette_distance(palette: &Palette, mean: [f64; 3]) -> f64 {
    palette
        .roles()
        .map(|r| crate::palette::rgb_distance(mean, to_f64(palette.color(r))))
        .fold(f64::INFINITY, f64::min)
}
