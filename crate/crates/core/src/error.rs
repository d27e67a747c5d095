use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the autoencoder library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("reconstruction loss overflowed: a saturated reconstruction disagrees with its label (example {example}, bit {bit})")]
    LossOverflow { example: usize, bit: usize },

    #[error("invalid loss kernel: {0}")]
    InvalidKernel(String),

    #[error("unknown kernel identifier `{0}` (expected `xent` or `hamming`)")]
    UnknownKernel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("value {value} out of range {range} in {context}")]
    OutOfRange {
        context: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("parse error in {path} at record {record}: {reason}")]
    Parse {
        path: PathBuf,
        record: usize,
        reason: String,
    },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(context: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
