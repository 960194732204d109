use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a documented constraint.
    #[error("configuration error: {0}")]
    Config(String),

    /// Array dimensions or signal framing do not agree.
    #[error("shape error: {0}")]
    Shape(String),

    /// Invalid argument to an otherwise well-configured operation.
    #[error("argument error: {0}")]
    Argument(String),

    /// A combiner could not be formed for a (user, subcarrier) slot.
    #[error("singular channel for user {user} on subcarrier {subcarrier}")]
    Singular { user: usize, subcarrier: usize },

    /// Non-finite values or a failed linear solve.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Blind adaptation blew up.
    #[error(
        "blind update diverged on subcarrier {subcarrier} (weight norm grew {growth:.3e}x); \
         use a smaller step size"
    )]
    Divergence { subcarrier: usize, growth: f64 },

    /// Scenario file could not be parsed.
    #[error("{path}: line {line}: {message}")]
    Syntax {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Syntax { .. } | Error::Argument(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
