use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed graph, boundary condition or parameter combination.
    #[error("validation error: {0}")]
    Validation(String),

    /// Unparseable input file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),

    /// Brute-force enumeration would exceed the configured cap.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Numerator and denominator of a ratio vanish together.
    #[error("indeterminate ratio: {0}")]
    IndeterminateRatio(String),

    /// Parameters outside the range where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method failed to converge or a self-check failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("no attracting fixed point: {0}")]
    NoAttractingPoint(String),

    #[error("invariance violation: {0}")]
    InvarianceViolation(String),
}
