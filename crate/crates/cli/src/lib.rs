//! Experiment harness: a registry of named experiments, one per acceptance
//! criterion, with flat-file configuration and versioned outputs.

pub mod config;
pub mod error;
pub mod experiments;
pub mod record;
pub mod registry;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, Params};
pub use error::{HResult, HarnessError};
pub use record::{Metric, ResultRecord, Status, SCHEMA};
pub use run::{run, RunOutcome};
