use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A state component left the finite range or exceeded the divergence
    /// threshold during integration.
    #[error("numerical divergence at t = {time}: {reason}")]
    Divergence { time: f64, reason: String },

    #[error("no solution: {0}")]
    NoSolution(String),

    /// An iterative routine ran out of sweeps.
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
