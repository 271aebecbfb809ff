use thiserror::Error;

/// Errors raised by the spectral toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coefficient vector {0} does not define a surjection onto Z/dZ")]
    NotSurjective(String),

    #[error(
        "kernel condition violated: the joint kernel of omega from index {start} on is nontrivial (contains {witness})"
    )]
    KernelCondition { start: usize, witness: String },

    #[error("{what} of size {size} exceeds the configured budget {limit}")]
    BudgetExceeded { what: &'static str, size: usize, limit: usize },

    #[error("negative radicand {0} when inverting a quadratic map")]
    NegativeRadicand(f64),

    #[error("point {0} lies outside the support of the density")]
    OutOfSupport(f64),

    #[error("{0} is not a birth eigenvalue at level {1} (eigenspace dimension {2})")]
    NotBirthEigenvalue(f64, usize, usize),

    #[error("eigenspace for {0} is numerically defective: {1}")]
    DefectiveEigenspace(f64, String),

    #[error("ball of radius {radius} too small: {reason}")]
    BallTooSmall { radius: usize, reason: String },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("Bloch matrix is not Hermitian at k = {0}")]
    NonHermitian(f64),

    #[error("operation requires the binary tree (d = 2), got d = {0}")]
    RequiresBinaryTree(usize),

    #[error("generating subset: {0}")]
    GeneratingSet(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
