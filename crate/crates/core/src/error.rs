use std::path::PathBuf;

use chrono::{DateTime, Utc};
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("alignment error: first offending timestamp {timestamp}: {message}")]
    Alignment {
        timestamp: DateTime<Utc>,
        message: String,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("SMO did not converge{}: residual KKT violation {residual:.3e} after {iterations} iterations", variant.map(|v| format!(" (variant {v})")).unwrap_or_default())]
    Convergence {
        variant: Option<usize>,
        residual: f64,
        iterations: usize,
    },

    #[error("variant {variant}: {source}")]
    Variant {
        variant: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("diagnostic error: {0}")]
    Diagnostic(String),

    #[error("malformed {kind} file at line {line}: {message}")]
    Format {
        kind: &'static str,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn tag_variant(self, variant: usize) -> Self {
        match self {
            Error::Convergence {
                residual,
                iterations,
                ..
            } => Error::Convergence {
                variant: Some(variant),
                residual,
                iterations,
            },
            other => Error::Variant {
                variant,
                source: Box::new(other),
            },
        }
    }
}
