use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("manifest row {row}: {message}")]
    ManifestRow { row: usize, message: String },
    #[error("duplicate sample key {0}")]
    DuplicateKey(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format(_) => "format",
            Error::ManifestRow { .. } => "manifest",
            Error::DuplicateKey(_) => "duplicate-key",
            Error::Degenerate(_) => "degenerate-input",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Contract(_) => "contract",
        }
    }
}
