use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge: {0}")]
    Convergence(String),

    #[error("quadrature error estimate {estimate:e} exceeds relative tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("covariance matrix is not positive definite (last jitter {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("drift has no finite sup bound: {0}")]
    UnboundedDrift(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("mismatched ensembles: {0}")]
    MismatchedEnsembles(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
