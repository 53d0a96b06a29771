//! Riemannian LBFGS over product SPD manifolds.
//!
//! The solver is mode-agnostic: every metric, transport and step goes through
//! a [`Geometry`](crate::manifold::Geometry). In the mapped modes the
//! direction recursion runs without any O(n³) kernel.

mod config;
mod direction;
mod linesearch;
mod solver;

pub use config::SolverConfig;
pub use direction::{get_direction, H0Scale, MemoryPair};
pub use linesearch::{wolfe_linesearch, LineSearchResult};
pub use solver::{solve, solve_with_progress, Progress, Solver, SolverStats, StepOutcome, Termination};

use crate::error::Result;
use crate::manifold::ProductPoint;
use crate::symkernel::Mat;

/// Euclidean gradient of a cost over a [`ProductPoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanGrad {
    pub blocks: Vec<Mat>,
    pub weights: Vec<f64>,
}

/// A smooth cost on a product of SPD blocks and a Euclidean vector.
pub trait Problem {
    fn cost(&self, at: &ProductPoint) -> Result<f64>;

    fn cost_and_grad(&self, at: &ProductPoint) -> Result<(f64, EuclideanGrad)>;
}

impl<P: Problem + ?Sized> Problem for &P {
    fn cost(&self, at: &ProductPoint) -> Result<f64> {
        (**self).cost(at)
    }

    fn cost_and_grad(&self, at: &ProductPoint) -> Result<(f64, EuclideanGrad)> {
        (**self).cost_and_grad(at)
    }
}
