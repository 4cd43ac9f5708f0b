//! Configuration, experiment runners, artifact writers and report assembly
//! behind the `nlslab` command.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod initial;
pub mod output;
pub mod report;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use error::{HarnessError, Result};
pub use experiments::{run_experiment, RunOutcome};
pub use output::{RunManifest, Verdict};
