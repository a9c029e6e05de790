//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by solvers, generators and the file formats.
#[derive(Debug, Error)]
pub enum AodlError {
    /// An argument violated a precondition (negative threshold, non-finite
    /// entries, domain violation of a formula).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value is out of range or inconsistent with the data.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Matrix dimensions disagree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A numerical routine could not produce a usable result
    /// (non-PSD Gram matrix, eigensolver breakdown).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Inversion of a singular matrix was requested without a ridge.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// A text matrix file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A dataset manifest is malformed or inconsistent.
    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl AodlError {
    /// True for errors caused by bad inputs or configuration rather than
    /// by a numerical breakdown. The CLI maps these to exit code 1 and
    /// numerical failures to exit code 2.
    pub fn is_validation(&self) -> bool {
        !matches!(self, AodlError::Numerical(_) | AodlError::SingularMatrix(_))
    }
}

pub type Result<T> = std::result::Result<T, AodlError>;
