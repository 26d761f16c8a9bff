//! Experiment harness for `wickspde`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{emit_config, parse_config, Command, ExperimentConfig};
pub use error::CliError;
pub use experiments::run_experiment;
pub use report::{emit_report, preflight, RunOutput, Table};
