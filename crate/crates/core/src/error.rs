use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received parameters outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge (residual {residual:e})")]
    Quadrature { residual: f64 },

    /// `H_phi^{-1}(z)` could not be bracketed below the float overflow cap.
    #[error("rate horizon exceeded: z = {z} is too large for the float range")]
    RateHorizonExceeded { z: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{states}x{states} transition matrix exceeds the memory cap of {cap} entries")]
    MemoryCap { states: usize, cap: usize },

    /// Simulation produced a non-finite or runaway state.
    #[error("state overflow at step {index} (value {value})")]
    Overflow { index: usize, value: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 for validation failures, 3 for
    /// numeric aborts, 1 for anything else (I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::Config(_)
            | Error::Json(_)
            | Error::LengthMismatch { .. }
            | Error::MemoryCap { .. } => 2,
            Error::Quadrature { .. }
            | Error::RateHorizonExceeded { .. }
            | Error::NonConvergence { .. }
            | Error::Overflow { .. } => 3,
            Error::Io { .. } | Error::Csv(_) => 1,
        }
    }
}
