use thiserror::Error;

/// Errors raised by problem construction, solvers and metrics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("step size eta = {eta} violates eta * L < 1 (L = {lipschitz})")]
    StepTooLarge { eta: f64, lipschitz: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular linear system (pivot magnitude {pivot:e})")]
    SingularSystem { pivot: f64 },

    #[error("operation requires a stochastic sampler but the map has none")]
    MissingSampler,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
