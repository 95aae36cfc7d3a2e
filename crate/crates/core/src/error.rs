use thiserror::Error;

use crate::boundary::Boundary;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate Gaussian law at t = {0} (covariance is singular)")]
    DegenerateLaw(f64),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The Picard sweep hit its iteration cap. The last iterate is kept so
    /// callers can inspect or resume from it.
    #[error("boundary iteration did not converge after {iterations} sweeps (last sup-norm change {last_change:.3e})")]
    NonConvergence {
        iterations: usize,
        last_change: f64,
        last: Box<Boundary>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
