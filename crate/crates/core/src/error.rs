//! Error type shared across the crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Chain parameters violate the circulant builder's preconditions.
    #[error("invalid chain spec: {0}")]
    InvalidSpec(String),

    /// A supplied matrix is not a strictly positive row-stochastic matrix.
    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),

    /// Requested normalized uncertainty cannot be reached by the builder.
    #[error("target normalized uncertainty {target} outside achievable range ({lo}, {hi})")]
    OutOfRange { target: f64, lo: f64, hi: f64 },

    /// Caller broke an API precondition (shape mismatch, bad channel index, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Training produced a non-finite loss or gradient.
    #[error("training diverged at slot {slot}: {reason}")]
    Divergence { slot: u64, reason: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed parameter file: {0}")]
    ParamFormat(String),

    /// A qualitative reproduction check did not hold.
    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } => 2,
            Error::CheckFailed(_) => 3,
            _ => 1,
        }
    }
}
