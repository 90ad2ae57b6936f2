use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error("undefined moment: {0}")]
    UndefinedMoment(String),

    #[error("no joint exceedances at level q = {0}")]
    NoJointExceedances(f64),

    #[error("structural error: {0}")]
    Structure(String),

    #[error("training diverged at step {step}: {reason}")]
    Divergence { step: usize, reason: String },

    #[error("weights file {context}: {message}")]
    WeightsFormat { context: String, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
