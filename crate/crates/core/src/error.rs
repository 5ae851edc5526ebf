use thiserror::Error;

/// Errors raised by the solver.
///
/// Variants map onto the categories reported by the command-line driver:
/// everything except [`KineticError::InvalidInput`] is a numerical failure.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum KineticError {
    /// A distribution or moment entry is NaN or infinite.
    #[error("invalid state: non-finite value at cell {cell}, velocity {velocity}")]
    InvalidState { cell: usize, velocity: usize },

    /// Density or temperature is not strictly positive in some cell.
    #[error("degenerate moments at cell {cell}: rho = {rho}, temperature = {temperature}")]
    DegenerateMoments {
        cell: usize,
        rho: f64,
        temperature: f64,
    },

    /// Argument outside the domain of a function (e.g. a non-positive temperature).
    #[error("domain error: {0}")]
    Domain(String),

    /// The moment-matching Newton iteration did not reach the tolerance.
    #[error("equilibrium correction failed after {iterations} iterations (residual {residual:e})")]
    CorrectionFailed { iterations: usize, residual: f64 },

    /// `|v| dt / dx` exceeds one for a stencil-based update.
    #[error("CFL violation: |v| dt / dx = {courant} > 1")]
    CflViolation { courant: f64 },

    /// Shape mismatch or invalid construction parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, KineticError>;
