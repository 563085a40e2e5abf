//! Experiment front end: snapshot files, JSON configs, reports and pipelines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod snapshot;

pub use config::{ConfigError, ExperimentConfig};
pub use error::LabError;
