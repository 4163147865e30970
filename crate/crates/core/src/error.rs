use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the detection, training and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("unsupported channel layout in {path}: {layout}")]
    UnsupportedLayout { path: PathBuf, layout: String },
    #[error("expected {expected} image, got {actual}")]
    ColorSpace {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("incompatible model: {0}")]
    Incompatible(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("training diverged: {0}")]
    Diverged(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
