use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the field generator and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite (pivot {pivot} at row {row}, jitter tried up to {jitter:e})")]
    NotPositiveDefinite { row: usize, pivot: f64, jitter: f64 },

    #[error("matrix is indefinite: eigenvalue {eigenvalue:e} is below tolerance {tolerance:e}")]
    IndefiniteMatrix { eigenvalue: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Invalid user configuration. `field` names the offending key.
    #[error("invalid configuration for `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("malformed data in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("not enough realizations: {found} < {required}")]
    TooFewRealizations { found: usize, required: usize },

    #[error("radius {radius} is not on the radial grid; add it to `grid.radii` (slices are never interpolated)")]
    RadiusNotOnGrid { radius: f64 },

    #[error("longitude {phi} and its antipode are not both on the phi grid")]
    LongitudeNotOnGrid { phi: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
