//! Experiment runner for the `sr-core` simulation lab: JSON configs in,
//! reproducible reports out.

#![forbid(unsafe_code)]

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, Format};
pub use error::LabError;
pub use report::{emit_report, parse_report, run_experiment, RunReport};
