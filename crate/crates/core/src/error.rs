use std::io;

use thiserror::Error;

/// Errors produced by graph construction, ingestion and execution.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
