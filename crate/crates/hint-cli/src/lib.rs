//! Training, evaluation, inference, and verification commands for the
//! hierarchical restoration network. The `hint` binary is a thin shell over
//! these modules; integration tests drive them directly.

pub mod ablate;
pub mod config;
pub mod error;
pub mod evalcmd;
pub mod gradcheckcmd;
pub mod infer;
pub mod loss;
pub mod optim;
pub mod pairs;
pub mod runlog;
pub mod train;

pub use config::TrainConfig;
pub use error::{CliError, Result, EXIT_DATA, EXIT_NUMERIC, EXIT_USAGE};
