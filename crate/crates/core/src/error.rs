//! Error type shared across the library.

use thiserror::Error;

/// Errors surfaced by numerical kernels, model evaluations and samplers.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix not positive definite: pivot {pivot} is non-positive")]
    NotPositiveDefinite { pivot: usize },

    /// Vector/matrix dimensions do not line up.
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    /// Too few observations for the requested statistic.
    #[error("insufficient degrees of freedom: n = {n}, active = {active}")]
    DegreesOfFreedom { n: usize, active: usize },

    /// A model evaluation produced an unusable value.
    #[error("evaluation failed in {op}: {msg}")]
    Evaluation { op: &'static str, msg: String },

    /// An optimizer ran out of iterations before meeting its tolerance.
    #[error("optimizer did not converge: gradient norm {grad_norm:.3e} after {iterations} iterations")]
    NonConvergence {
        grad_norm: f64,
        iterations: usize,
        /// Best iterate found, so callers can degrade gracefully.
        best: Vec<f64>,
        best_objective: f64,
    },
}

impl CoreError {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        CoreError::Domain {
            op,
            msg: msg.into(),
        }
    }

    pub(crate) fn eval(op: &'static str, msg: impl Into<String>) -> Self {
        CoreError::Evaluation {
            op,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
