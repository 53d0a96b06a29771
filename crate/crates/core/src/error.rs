use thiserror::Error;

use crate::manifold::MappingMode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("symmetric eigensolver did not converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mapping mode mismatch: {left:?} vs {right:?}")]
    ModeMismatch { left: MappingMode, right: MappingMode },

    #[error("tangent vectors live at different base points")]
    BaseMismatch,

    #[error("search direction is not a descent direction (slope {slope})")]
    NonDescentDirection { slope: f64 },

    #[error("line search failed after {evals} evaluations (last step {step})")]
    LineSearchFailed { evals: usize, step: f64 },

    #[error("initial point is infeasible: {0}")]
    InfeasibleStart(String),

    #[error("memory pair rejected: g(s,y) = {g_sy} is not above the curvature guard")]
    CurvatureBreakdown { g_sy: f64 },

    #[error("cluster {cluster} is empty")]
    DegenerateCluster { cluster: usize },

    #[error("could not place {k} separated means after {trials} trials")]
    SeparationUnsatisfiable { k: usize, trials: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
