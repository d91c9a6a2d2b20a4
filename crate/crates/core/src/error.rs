use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set violates one of its invariants.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Rejection sampling could not place a mobile within the retry budget.
    #[error("infeasible packing: mobile {index} not placed after {attempts} draws")]
    InfeasiblePacking { index: usize, attempts: u64 },

    /// A probability escaped [0, 1] by more than the numerical tolerance.
    #[error("numerical failure: {what} = {value} is not a probability")]
    NumericalFailure { what: &'static str, value: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
