use std::path::PathBuf;

use crate::grid::Cell;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cells {from} and {to} are not 4-adjacent")]
    NonAdjacentCells { from: Cell, to: Cell },

    #[error("moving from {from} leaves the {rows}x{cols} board")]
    OutOfBounds { from: Cell, rows: usize, cols: usize },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("corridor pixel {0} is a wall")]
    WallViolation(Cell),

    #[error("generation exhausted after {attempts} attempts (seed {seed})")]
    GenerationExhausted { attempts: usize, seed: u64 },

    #[error("{colors} colors need at least {needed} cells, path has {available}")]
    TooManyColors {
        colors: usize,
        needed: usize,
        available: usize,
    },

    #[error("illegal move {action:?} from {player}")]
    IllegalMove {
        player: Cell,
        action: crate::grid::Action,
    },

    #[error("pad_to {pad_to} is smaller than the {frames} logical frames")]
    PadTooSmall { pad_to: usize, frames: usize },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("ambiguous transition after frame {0}")]
    AmbiguousTransition(usize),

    #[error("schema version mismatch: {0}")]
    SchemaVersionMismatch(String),

    #[error("corrupt frame data in {path}: {reason}")]
    CorruptFrame { path: PathBuf, reason: String },

    #[error("unknown task {0:?}")]
    UnknownTask(String),

    #[error("unparsable frame: {0}")]
    UnparsableFrame(String),

    #[error("mismatched manifest: {0}")]
    MismatchedManifest(String),

    #[error("instance {id} failed verification: {reason}")]
    VerificationFailed { id: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
