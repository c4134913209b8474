//! Crate-wide error type.
//!
//! Errors fall into three families that the command-line frontend maps to
//! distinct exit codes: configuration problems (bad arguments, inconsistent
//! rates, malformed configs), numerical failures (singular systems, failed
//! measurements), and I/O or file-format problems.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Numerical failure: singular system, non-convergence, failed measurement.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Operating-system level I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file contents: bad magic, unsupported version, truncation.
    #[error("file format error: {0}")]
    Format(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

impl From<hound::Error> for Error {
    fn from(e: hound::Error) -> Self {
        match e {
            hound::Error::IoError(io) => Error::Io(io),
            other => Error::Format(other.to_string()),
        }
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
