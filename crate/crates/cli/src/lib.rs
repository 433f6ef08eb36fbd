//! Command implementations behind the `windstack` binary: synthetic data,
//! cluster-count selection, training, evaluation and comparison studies.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod study;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
