use thiserror::Error;

/// Errors raised by the matrix kernel, the problem model, and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NonHermitian(f64),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("eigensolver did not converge")]
    NumericalFailure,

    #[error("matrix is not positive definite (min eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("aggregate operator is singular (min eigenvalue {0:.3e})")]
    SingularAggregate(f64),

    #[error("degenerate instance: every weight operator is zero")]
    DegenerateInstance,

    #[error("degenerate chord: both tracked points share q = {0}")]
    DegenerateChord(f64),

    #[error("no feasible iterate has been observed yet")]
    NotYetFeasible,

    #[error("no grid point satisfies the constraint")]
    EmptyFeasibleGrid,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
