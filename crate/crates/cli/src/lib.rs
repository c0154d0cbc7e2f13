//! Experiment orchestration for `brinklab`: TOML configs, replicate-parallel
//! pipelines, and TSV/JSON scaling reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod oracle;
pub mod report;

pub use config::{ConfigError, DensitySpec, EventKind, ExperimentConfig, ExperimentKind, GridSpec};
pub use experiments::{run_experiment, run_experiment_with_threads};
pub use oracle::run_oracles;
pub use report::{Check, FitSummary, Provenance, Row, ScalingReport};
