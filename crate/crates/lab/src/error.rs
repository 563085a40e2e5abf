use aniso_core::harnack::HarnackError;
use aniso_core::hoelder::HoelderError;
use aniso_core::{GeometryError, SolverError};
use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("validation: {0}")]
    Validation(String),
    #[error("solver became unstable: {0}")]
    Instability(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("snapshot format: {0}")]
    Format(String),
}

impl LabError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        LabError::Io { context: context.into(), source }
    }

    /// 2 usage, 3 validation, 4 instability, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Usage(_) => 2,
            LabError::Config(_) | LabError::Validation(_) => 3,
            LabError::Instability(_) => 4,
            LabError::Io { .. } | LabError::Format(_) => 5,
        }
    }
}

impl From<SolverError> for LabError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::UnstableStep { .. } | SolverError::NonFinite { .. } | SolverError::NegativeValue { .. } => {
                LabError::Instability(e.to_string())
            }
            other => LabError::Validation(other.to_string()),
        }
    }
}

impl From<GeometryError> for LabError {
    fn from(e: GeometryError) -> Self {
        LabError::Validation(e.to_string())
    }
}

impl From<HarnackError> for LabError {
    fn from(e: HarnackError) -> Self {
        LabError::Validation(e.to_string())
    }
}

impl From<HoelderError> for LabError {
    fn from(e: HoelderError) -> Self {
        match e {
            HoelderError::Solver(s) => s.into(),
            other => LabError::Validation(other.to_string()),
        }
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io { context: "csv".into(), source: std::io::Error::other(e.to_string()) }
    }
}
