//! Rule-verifiable grid reasoning tasks: procedural generation of Maze,
//! FlowFree and Sokoban instances, frame rendering and parsing, dense
//! decomposed rewards, symbolic success checks and alignment metrics.

pub mod batch;
pub mod dataset;
pub mod domain;
pub mod error;
pub mod flowfree;
pub mod grid;
pub mod instance;
pub mod maze;
pub mod metrics;
pub mod palette;
pub mod render;
pub mod report;
pub mod rewards;
pub mod rng;
pub mod sokoban;

pub use domain::{dispatch_reward, domain, domain_by_name, domains, GenOptions, TaskDomain};
pub use error::{Error, Result};
pub use grid::{Action, Bounds, Cell};
pub use instance::{Payload, TaskInstance, TaskKind, Trajectory};
pub use metrics::AlignmentScore;
pub use palette::Palette;
pub use render::{Frame, FrameSequence};
pub use rewards::{RewardBreakdown, RewardMode};
pub use rng::SeededRng;
