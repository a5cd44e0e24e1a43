//! Configured experiments: parsing, execution and output.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{DataMode, ExperimentConfig, ExperimentKind, ProblemKind};
pub use output::{write_outputs, Table};
pub use runner::{run, Assertion, Level, RunManifest, RunOutcome};
