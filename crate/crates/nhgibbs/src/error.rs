use std::io;
use std::path::PathBuf;

use nhgibbs_core::estimate::EstimateError;
use nhgibbs_core::gnz::GnzError;
use nhgibbs_core::models::ModelError;
use nhgibbs_core::sampler::SamplerError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const DIAGNOSTIC_FAILURE: u8 = 1;
    pub const INVALID_INPUT: u8 = 2;
    pub const INTERNAL: u8 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {message}", path.display())]
    BadFile { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Gnz(#[from] GnzError),
    #[error("GNZ balance breached: max |z| = {0}")]
    GnzBreach(f64),
    #[error("internal check failed: {0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn csv(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Csv { path, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::GnzBreach(_) => exit::DIAGNOSTIC_FAILURE,
            CliError::Internal(_)
            | CliError::Sampler(SamplerError::IncoherentCache { .. } | SamplerError::InfeasibleState(_)) => {
                exit::INTERNAL
            }
            _ => exit::INVALID_INPUT,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
