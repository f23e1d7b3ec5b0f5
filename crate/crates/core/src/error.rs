use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Bad invocation or configuration. Maps to exit code 1.
    #[error("usage: {0}")]
    Usage(String),

    /// Input data is missing, malformed or too small. Maps to exit code 2.
    #[error("data: {0}")]
    Data(String),

    /// Non-finite values, degenerate vectors, undefined statistics. Maps to exit code 3.
    #[error("numeric: {0}")]
    Numeric(String),

    #[error("checkpoint format: {0}")]
    Format(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("stale trace: recorded at parameter version {trace}, model is at {model}")]
    StaleTrace { trace: u64, model: u64 },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. } | Error::Data(_) | Error::Format(_) => 2,
            Error::Numeric(_) | Error::Dimension { .. } | Error::StaleTrace { .. } => 3,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Data(e.to_string())
    }
}
