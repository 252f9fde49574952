//! Error type shared across the simulator.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A scenario parameter is out of its admissible range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Config or result file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Matrix/vector dimensions are inconsistent.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Element placement leads to coincident points or other singular setups.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Numerical routine failed (singular matrix, failed factorization).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
