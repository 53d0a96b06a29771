use super::{Problem, SolverConfig};
use crate::error::{Error, Result};
use crate::manifold::{Geometry, ProductPoint, ProductTangent};

#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub point: ProductPoint,
    pub cost: f64,
    /// Riemannian gradient at `point`, in the geometry's mode.
    pub grad: ProductTangent,
    pub evals: usize,
}

enum Trial {
    Rejected,
    Evaluated {
        point: ProductPoint,
        cost: f64,
        grad: ProductTangent,
        slope: f64,
    },
}

/// Bracketing search for a step satisfying the Wolfe conditions.
///
/// Starts at `α = 1`, doubles while the curvature condition fails with no
/// upper bracket, and bisects once a bracket exists. Trial points that leave
/// the SPD cone or produce a non-finite cost count as an Armijo failure.
pub fn wolfe_linesearch<P: Problem + ?Sized>(
    problem: &P,
    geom: &Geometry,
    config: &SolverConfig,
    at: &ProductPoint,
    xi: &ProductTangent,
    f0: f64,
    g0: f64,
) -> Result<LineSearchResult> {
    if !(g0 < 0.0) {
        return Err(Error::NonDescentDirection { slope: g0 });
    }
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    let mut alpha = 1.0;

    for evals in 1..=config.max_linesearch_evals {
        match evaluate(problem, geom, config, at, xi, alpha, f0, g0)? {
            Trial::Rejected => hi = alpha,
            Trial::Evaluated {
                point,
                cost,
                grad,
                slope,
            } => {
                let curvature_ok = if config.strong_wolfe {
                    slope.abs() <= config.c2 * g0.abs()
                } else {
                    slope >= config.c2 * g0
                };
                if curvature_ok {
                    return Ok(LineSearchResult {
                        alpha,
                        point,
                        cost,
                        grad,
                        evals,
                    });
                }
                if slope > 0.0 {
                    hi = alpha;
                } else {
                    lo = alpha;
                }
            }
        }
        alpha = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * alpha };
        if alpha < config.min_step {
            return Err(Error::LineSearchFailed { evals, step: alpha });
        }
    }
    Err(Error::LineSearchFailed {
        evals: config.max_linesearch_evals,
        step: alpha,
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate<P: Problem + ?Sized>(
    problem: &P,
    geom: &Geometry,
    config: &SolverConfig,
    at: &ProductPoint,
    xi: &ProductTangent,
    alpha: f64,
    f0: f64,
    g0: f64,
) -> Result<Trial> {
    let step = xi.scale(alpha);
    let point = match geom.product_step(at, &step, config.step_rule) {
        Ok(p) => p,
        Err(Error::NotPositiveDefinite { .. } | Error::ConvergenceFailure { .. }) => return Ok(Trial::Rejected),
        Err(e) => return Err(e),
    };
    let (cost, egrad) = match problem.cost_and_grad(&point) {
        Ok(v) => v,
        Err(Error::NotPositiveDefinite { .. } | Error::ConvergenceFailure { .. }) => return Ok(Trial::Rejected),
        Err(e) => return Err(e),
    };
    if !cost.is_finite() || cost > f0 + config.c1 * alpha * g0 {
        return Ok(Trial::Rejected);
    }
    let grad = geom.product_egrad_to_rgrad(&point, &egrad.blocks, &egrad.weights)?;
    let carried = geom.product_transport(xi, &point)?;
    let slope = geom.product_metric(&grad, &carried)?;
    Ok(Trial::Evaluated {
        point,
        cost,
        grad,
        slope,
    })
}
