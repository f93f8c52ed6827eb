use thiserror::Error;

/// Errors raised by state construction, propagation and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("truncation would discard weight {discarded:e}, bound is {bound:e}")]
    TruncationLoss { discarded: f64, bound: f64 },

    #[error("negative population {value:e} at level {level}")]
    NegativePopulation { level: usize, value: f64 },

    #[error("Fano factor is undefined at zero mean photon number")]
    UndefinedFano,

    #[error("eigendecomposition failed for a {dim}x{dim} state")]
    Eigensolver { dim: usize },

    #[error("damping step too stiff: gamma*t*(nbar+1)*n_max = {stiffness} exceeds {bound}")]
    Stiffness { stiffness: f64, bound: f64 },

    #[error("insufficient data: need {needed} collisions, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("state failed validation after collision {collision}: {detail}")]
    InvalidState { collision: usize, detail: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
