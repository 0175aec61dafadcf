use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs are well-typed but fail a structural check (symmetry,
    /// dimension, symplecticity, kind/parameter consistency).
    #[error("validation error: {0}")]
    Validation(String),

    /// A covariance matrix violates the uncertainty principle.
    #[error("unphysical state: {0}")]
    Unphysical(String),

    /// The requested photon-subtraction event has zero probability.
    #[error("impossible heralding: {0}")]
    ImpossibleHeralding(String),

    /// The Fock truncation is too small for the requested state.
    #[error("truncation tail {tail:.3e} exceeds budget {budget:.1e}; use n_max >= {suggested}")]
    TruncationBudget {
        tail: f64,
        budget: f64,
        suggested: usize,
    },

    #[error("probability underflow: {0}")]
    Underflow(String),

    /// No parameter choice yields a positive key.
    #[error("no key: {0}")]
    NoKey(String),

    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn unphysical(msg: impl Into<String>) -> Self {
        Error::Unphysical(msg.into())
    }
}
