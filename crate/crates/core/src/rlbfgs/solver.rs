use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use web_time::Instant;

use super::direction::{get_direction, H0Scale, MemoryPair};
use super::linesearch::{wolfe_linesearch, LineSearchResult};
use super::{Problem, SolverConfig};
use crate::error::{Error, Result};
use crate::manifold::{Geometry, ProductPoint, ProductTangent};
use crate::symkernel::CounterScope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: usize,
    /// Seconds.
    pub wall_time: f64,
    pub per_iter_time: f64,
    pub final_cost: f64,
    pub final_grad_norm: f64,
    /// `f(Σ_k)` for every accepted iterate, starting with `Σ₀`.
    pub cost_trace: Vec<f64>,
    pub cubic_calls_in_recursion: u64,
    pub termination: Termination,
    pub linesearch_evals: usize,
    pub memory_resets: usize,
}

/// Per-iteration report passed to the progress callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub iteration: usize,
    pub cost: f64,
    pub grad_norm: f64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Stop(Termination),
}

/// Solver state; advance it with [`Solver::step`].
pub struct Solver<'a, P: Problem + ?Sized> {
    problem: &'a P,
    geom: Geometry,
    config: SolverConfig,
    point: ProductPoint,
    cost: f64,
    grad: ProductTangent,
    grad_norm: f64,
    memory: VecDeque<MemoryPair>,
    h: H0Scale,
    iteration: usize,
    cost_trace: Vec<f64>,
    cubic_calls_in_recursion: u64,
    linesearch_evals: usize,
    memory_resets: usize,
}

impl<'a, P: Problem + ?Sized> Solver<'a, P> {
    pub fn new(problem: &'a P, x0: ProductPoint, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let geom = config.geometry();
        let (cost, egrad) = problem
            .cost_and_grad(&x0)
            .map_err(|e| Error::InfeasibleStart(e.to_string()))?;
        if !cost.is_finite() {
            return Err(Error::InfeasibleStart(format!("initial cost is {cost}")));
        }
        let grad = geom.product_egrad_to_rgrad(&x0, &egrad.blocks, &egrad.weights)?;
        let grad_norm = geom.product_norm(&grad)?;
        if !grad_norm.is_finite() {
            return Err(Error::InfeasibleStart(format!("initial gradient norm is {grad_norm}")));
        }
        Ok(Self {
            problem,
            geom,
            h: steepest_scale(grad_norm),
            config,
            point: x0,
            cost,
            grad,
            grad_norm,
            memory: VecDeque::new(),
            iteration: 0,
            cost_trace: vec![cost],
            cubic_calls_in_recursion: 0,
            linesearch_evals: 0,
            memory_resets: 0,
        })
    }

    pub fn point(&self) -> &ProductPoint {
        &self.point
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn grad(&self) -> &ProductTangent {
        &self.grad
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad_norm
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn memory(&self) -> impl ExactSizeIterator<Item = &MemoryPair> {
        self.memory.iter()
    }

    pub fn h(&self) -> H0Scale {
        self.h
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn cubic_calls_in_recursion(&self) -> u64 {
        self.cubic_calls_in_recursion
    }

    /// One iteration: direction, line search, memory update.
    pub fn step(&mut self) -> Result<StepOutcome> {
        if self.grad_norm < self.config.grad_tol {
            return Ok(StepOutcome::Stop(Termination::Converged));
        }
        if self.iteration >= self.config.max_iters {
            return Ok(StepOutcome::Stop(Termination::MaxIters));
        }

        let (direction, accepted) = match self.search_along_memory()? {
            Some(found) => found,
            None => {
                self.reset_memory();
                let direction = self.direction()?;
                match self.line_search(&direction) {
                    Ok(r) => (direction, r),
                    Err(Error::LineSearchFailed { .. } | Error::NonDescentDirection { .. }) => {
                        return Ok(StepOutcome::Stop(Termination::LineSearchFailed));
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        self.accept(direction, accepted)?;
        Ok(StepOutcome::Continue)
    }

    /// Line search along the quasi-Newton direction; `None` asks for a
    /// steepest-descent retry with cleared memory.
    fn search_along_memory(&mut self) -> Result<Option<(ProductTangent, LineSearchResult)>> {
        let direction = self.direction()?;
        match self.line_search(&direction) {
            Ok(r) => Ok(Some((direction, r))),
            Err(Error::LineSearchFailed { .. } | Error::NonDescentDirection { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn direction(&mut self) -> Result<ProductTangent> {
        let memory = self.memory.make_contiguous();
        let scope = CounterScope::begin();
        let d = get_direction(&self.geom, &self.grad.scale(-1.0), memory.len(), memory, self.h)?;
        self.cubic_calls_in_recursion += scope.counts().cubic_calls;
        Ok(d)
    }

    fn line_search(&mut self, direction: &ProductTangent) -> Result<LineSearchResult> {
        let g0 = self.geom.product_metric(&self.grad, direction)?;
        let r = wolfe_linesearch(
            self.problem,
            &self.geom,
            &self.config,
            &self.point,
            direction,
            self.cost,
            g0,
        );
        if let Ok(found) = &r {
            self.linesearch_evals += found.evals;
        } else if let Err(Error::LineSearchFailed { evals, .. }) = &r {
            self.linesearch_evals += evals;
        }
        r
    }

    fn reset_memory(&mut self) {
        self.memory.clear();
        self.h = steepest_scale(self.grad_norm);
        self.memory_resets += 1;
    }

    fn accept(&mut self, direction: ProductTangent, found: LineSearchResult) -> Result<()> {
        let LineSearchResult {
            alpha,
            point,
            cost,
            grad,
            ..
        } = found;
        let s = self.geom.product_transport(&direction.scale(alpha), &point)?;
        let y = grad.sub(&self.geom.product_transport(&self.grad, &point)?);
        let prev = std::mem::replace(&mut self.point, point.clone());

        let pair = MemoryPair::new(&self.geom, s, y, point, prev, self.config.curvature_guard);
        match pair {
            Ok(pair) => {
                let g_yy = self.geom.product_metric(&pair.y, &pair.y)?;
                self.h = H0Scale::new(pair.g_sy / g_yy).unwrap_or(self.h);
                self.memory.push_back(pair);
                while self.memory.len() > self.config.memory_window {
                    self.memory.pop_front();
                }
            }
            Err(Error::CurvatureBreakdown { .. }) => {}
            Err(e) => return Err(e),
        }

        self.cost = cost;
        self.grad_norm = self.geom.product_norm(&grad)?;
        self.grad = grad;
        self.iteration += 1;
        self.cost_trace.push(cost);
        Ok(())
    }

    fn finish(self, termination: Termination, wall_time: f64) -> (ProductPoint, SolverStats) {
        let stats = SolverStats {
            iterations: self.iteration,
            wall_time,
            per_iter_time: if self.iteration > 0 {
                wall_time / self.iteration as f64
            } else {
                0.0
            },
            final_cost: self.cost,
            final_grad_norm: self.grad_norm,
            cost_trace: self.cost_trace,
            cubic_calls_in_recursion: self.cubic_calls_in_recursion,
            termination,
            linesearch_evals: self.linesearch_evals,
            memory_resets: self.memory_resets,
        };
        (self.point, stats)
    }
}

fn steepest_scale(grad_norm: f64) -> H0Scale {
    H0Scale::new(grad_norm.recip()).unwrap_or(H0Scale::new(1.0).expect("1 is a valid scale"))
}

pub fn solve<P: Problem + ?Sized>(
    problem: &P,
    x0: ProductPoint,
    config: &SolverConfig,
) -> Result<(ProductPoint, SolverStats)> {
    solve_with_progress(problem, x0, config, |_| {})
}

pub fn solve_with_progress<P: Problem + ?Sized>(
    problem: &P,
    x0: ProductPoint,
    config: &SolverConfig,
    mut on_progress: impl FnMut(&Progress),
) -> Result<(ProductPoint, SolverStats)> {
    let start = Instant::now();
    let mut solver = Solver::new(problem, x0, config.clone())?;
    let report = |s: &Solver<'_, P>| Progress {
        iteration: s.iteration,
        cost: s.cost,
        grad_norm: s.grad_norm,
        elapsed: start.elapsed().as_secs_f64(),
    };
    on_progress(&report(&solver));
    loop {
        match solver.step()? {
            StepOutcome::Continue => on_progress(&report(&solver)),
            StepOutcome::Stop(t) => {
                let elapsed = start.elapsed().as_secs_f64();
                return Ok(solver.finish(t, elapsed));
            }
        }
    }
}
