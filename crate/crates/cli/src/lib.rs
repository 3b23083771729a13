//! Experiment harness around the synthetic-likelihood core: config file
//! parsing, run orchestration (single runs, parameter grids, repeated
//! sampling), artifact persistence and report emission.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{format_errors, parse_config, ConfigError, ExperimentConfig};
pub use runner::{run_experiment, RunReport};
