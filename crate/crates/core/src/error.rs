//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument to a construction or evaluation routine.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Configuration file problem, with the 1-based line it occurred on.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    /// Matrix dimensions incompatible with the requested operation.
    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    /// A direct factorization hit a zero or unusable pivot.
    #[error("singular pivot in row {row}")]
    SingularPivot { row: usize },

    /// An iterative solver stopped without reaching its tolerance.
    #[error("{solver} did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    /// Conjugate gradients detected a direction of nonpositive curvature.
    #[error("operator is not positive definite (curvature {curvature:.3e} at iteration {iteration})")]
    Indefinite { iteration: usize, curvature: f64 },

    /// Two Dirichlet constraints disagree on the same unknown.
    #[error("conflicting boundary values for dof {dof}: {first} vs {second}")]
    ConflictingBoundaryValue { dof: usize, first: f64, second: f64 },

    /// A coefficient polynomial is not positive on [0, 1].
    #[error("coefficient not positive on [0,1]: value {value:.3e} at z = {z}")]
    CoefficientNotPositive { z: f64, value: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
