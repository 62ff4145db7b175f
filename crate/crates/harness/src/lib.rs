//! Experiment runner behind the `heine` command line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod free_energy;
pub mod gn;
pub mod output;

pub use commands::{run, Command, RunOptions};
pub use config::{ExperimentConfig, LoadedConfig};
pub use error::HarnessError;
