//! Experiment runner: configuration, command dispatch and report writing.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::run;
pub use config::{Experiment, ExperimentConfig, Format};
pub use report::{Report, Table};
