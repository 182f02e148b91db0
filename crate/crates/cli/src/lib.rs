//! Experiment runner: config parsing, command dispatch and run manifests.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod runner;

pub use commands::{Outcome, ReportRow, Verdict};
pub use config::{parse_config, Command, ConfigError, ConfigErrors, ExperimentConfig};
pub use runner::{run, run_directory, RunError, RunManifest, Status};
