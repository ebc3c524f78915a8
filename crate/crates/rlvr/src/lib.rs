//! Group-relative policy optimisation of a toy flow-matching policy whose
//! samples decode to action sequences scored by the grid verifiers.

pub mod error;
pub mod fit;
pub mod grpo;
pub mod latent;
pub mod model;
pub mod rollout;
pub mod schedule;
pub mod train;

pub use error::{Result, RlError};
pub use model::{ModelDims, ToyVelocityModel};
pub use schedule::DenoiseSchedule;
pub use train::{grpo_train, run_toy, TrainConfig};
