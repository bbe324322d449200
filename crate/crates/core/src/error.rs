//! Library error type.

use crate::signal::Signal;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Malformed or inconsistent input: dimension mismatch, parameter out of
    /// range, exhausted enumeration budget.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A point left the declared domain box of a nonlinearity whose
    /// derivative bound only holds inside that box.
    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// No step size satisfies the required inequalities for the requested
    /// solver and constants.
    #[error("infeasible step size: {0}")]
    Infeasible(String),

    /// An iterate or gradient became non-finite. Carries the last finite
    /// iterate so callers can inspect where the run broke down.
    #[error("solver diverged at iteration {iteration}")]
    Diverged {
        iteration: usize,
        last_iterate: Signal,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
