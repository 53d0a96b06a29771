use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{ClassicalTransport, Geometry, MappingMode, StepRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub memory_window: usize,
    pub max_iters: usize,
    /// Stop once the gradient norm in the mode's own metric drops below this.
    pub grad_tol: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_linesearch_evals: usize,
    pub min_step: f64,
    pub mode: MappingMode,
    pub step_rule: StepRule,
    /// A pair with `g(s,y) <= curvature_guard * g(s,s)` is not stored.
    pub curvature_guard: f64,
    pub strong_wolfe: bool,
    pub classical_transport: ClassicalTransport,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            memory_window: 30,
            max_iters: 1500,
            grad_tol: 1e-5,
            c1: 0.1,
            c2: 0.9,
            max_linesearch_evals: 50,
            min_step: 1e-16,
            mode: MappingMode::InverseSqrt,
            step_rule: StepRule::ExpMap,
            curvature_guard: 1e-12,
            strong_wolfe: false,
            classical_transport: ClassicalTransport::EigenRoot,
        }
    }
}

impl SolverConfig {
    pub fn with_mode(mut self, mode: MappingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn geometry(&self) -> Geometry {
        Geometry::new(self.mode).with_classical_transport(self.classical_transport)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_owned()));
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return bad("line-search constants must satisfy 0 < c1 < c2 < 1");
        }
        if self.memory_window == 0 {
            return bad("memory_window must be positive");
        }
        if !(self.grad_tol >= 0.0) || !(self.min_step > 0.0) || !(self.curvature_guard >= 0.0) {
            return bad("grad_tol, min_step and curvature_guard must be non-negative (min_step positive)");
        }
        if self.max_linesearch_evals == 0 {
            return bad("max_linesearch_evals must be positive");
        }
        Ok(())
    }
}
