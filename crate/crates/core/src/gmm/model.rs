use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::manifold::ProductPoint;
use crate::rlbfgs::{EuclideanGrad, Problem};
use crate::symkernel::{cholesky, Mat, SpdPoint, SymMat};

/// Points per partial sum. Partials are reduced in chunk order, so the
/// sequential and parallel paths give bit-identical results.
const CHUNK: usize = 256;

/// Mixture parameters in the usual form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covs: Vec<SymMat>,
}

impl GmmParams {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.means.len() != k || self.covs.len() != k {
            return Err(Error::InvalidInput(
                "weights, means and covs must have one entry per component".into(),
            ));
        }
        let n = self.dim();
        if self.means.iter().any(|m| m.len() != n) || self.covs.iter().any(|c| c.dim() != n) {
            return Err(Error::InvalidInput("component dimensions differ".into()));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput("weights must be non-negative and sum to 1".into()));
        }
        for c in &self.covs {
            cholesky(c)?;
        }
        Ok(())
    }
}

/// Mixing weights from `K − 1` logits, the last logit being 0.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let full: Vec<f64> = logits.iter().copied().chain([0.0]).collect();
    let top = full.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = full.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let full: Vec<f64> = logits.iter().copied().chain([0.0]).collect();
    let lse = log_sum_exp(&full);
    full.into_iter().map(|v| v - lse).collect()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// `S = [[Σ + μμᵀ, μ], [μᵀ, 1]]` per component, logits `ln(α_j / α_K)`.
pub fn init_point(params: &GmmParams) -> Result<ProductPoint> {
    params.validate()?;
    let n = params.dim();
    let blocks = params
        .means
        .iter()
        .zip(&params.covs)
        .map(|(mu, cov)| {
            let s = Mat::from_fn(n + 1, |i, j| match (i < n, j < n) {
                (true, true) => cov[(i, j)] + mu[i] * mu[j],
                (true, false) => mu[i],
                (false, true) => mu[j],
                (false, false) => 1.0,
            });
            SpdPoint::new(SymMat::symmetrize(s))
        })
        .collect::<Result<Vec<_>>>()?;
    let last = *params.weights.last().expect("validated non-empty");
    let logits = params.weights[..params.weights.len() - 1]
        .iter()
        .map(|w| (w / last).ln())
        .collect();
    Ok(ProductPoint::new(blocks, logits))
}

/// Inverse of [`init_point`]: `μ = S[..n, n] / β`, `Σ = S[..n, ..n] − β μμᵀ`
/// with `β = S[n, n]`.
pub fn recover_params(point: &ProductPoint) -> Result<GmmParams> {
    let (_, n) = check_point(point, None)?;
    let mut means = Vec::with_capacity(point.blocks.len());
    let mut covs = Vec::with_capacity(point.blocks.len());
    for block in &point.blocks {
        let s = block.mat();
        let beta = s[(n, n)];
        let mu: Vec<f64> = (0..n).map(|i| s[(i, n)] / beta).collect();
        let cov = SymMat::symmetrize(Mat::from_fn(n, |i, j| s[(i, j)] - beta * mu[i] * mu[j]));
        cholesky(&cov)?;
        means.push(mu);
        covs.push(cov);
    }
    Ok(GmmParams {
        weights: softmax(&point.weights),
        means,
        covs,
    })
}

/// Returns `(K, n)` after checking block and logit shapes.
fn check_point(point: &ProductPoint, data: Option<&Dataset>) -> Result<(usize, usize)> {
    let k = point.blocks.len();
    if k == 0 {
        return Err(Error::InvalidInput("a mixture needs at least one component".into()));
    }
    if point.weights.len() + 1 != k {
        return Err(Error::DimensionMismatch {
            expected: k - 1,
            got: point.weights.len(),
        });
    }
    let m = point.blocks[0].dim();
    if let Some(b) = point.blocks.iter().find(|b| b.dim() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: b.dim(),
        });
    }
    if m < 2 {
        return Err(Error::InvalidInput("blocks must have dimension n + 1 >= 2".into()));
    }
    if let Some(d) = data {
        if d.dim() + 1 != m {
            return Err(Error::DimensionMismatch {
                expected: d.dim() + 1,
                got: m,
            });
        }
    }
    Ok((k, m - 1))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

struct Partial {
    cost: Compensated,
    /// Per block: `Σ r u uᵀ` with `u = S⁻¹ y`.
    outer: Vec<Mat>,
    /// Per block: `Σ r`.
    mass: Vec<f64>,
}

struct Prepared<'a> {
    blocks: &'a [std::sync::Arc<SpdPoint>],
    /// `ln ω_j + ½ − (n/2) ln 2π − ½ ln det S_j`
    offsets: Vec<f64>,
}

fn prepare<'a>(point: &'a ProductPoint, n: usize) -> Prepared<'a> {
    let constant = 0.5 - 0.5 * n as f64 * (2.0 * PI).ln();
    let offsets = log_softmax(&point.weights)
        .into_iter()
        .zip(&point.blocks)
        .map(|(lw, b)| lw + constant - 0.5 * b.log_det())
        .collect();
    Prepared {
        blocks: &point.blocks,
        offsets,
    }
}

fn chunk_partial(prep: &Prepared<'_>, data: &Dataset, range: std::ops::Range<usize>, with_grad: bool) -> Partial {
    let k = prep.blocks.len();
    let m = data.dim() + 1;
    let mut part = Partial {
        cost: Compensated::default(),
        outer: if with_grad { vec![Mat::zeros(m); k] } else { Vec::new() },
        mass: vec![0.0; k],
    };
    let mut logs = vec![0.0; k];
    for i in range {
        let y = data.augmented(i);
        for j in 0..k {
            logs[j] = prep.offsets[j] - 0.5 * prep.blocks[j].quad_form_inv(y);
        }
        let lse = log_sum_exp(&logs);
        part.cost.add(-lse);
        if !with_grad {
            continue;
        }
        for j in 0..k {
            let r = (logs[j] - lse).exp();
            part.mass[j] += r;
            let u = prep.blocks[j].solve_vec(y);
            let acc = &mut part.outer[j];
            for a in 0..m {
                let ra = r * u[a];
                for b in 0..m {
                    acc[(a, b)] += ra * u[b];
                }
            }
        }
    }
    part
}

fn partials(prep: &Prepared<'_>, data: &Dataset, with_grad: bool, parallel: bool) -> Vec<Partial> {
    let ranges: Vec<std::ops::Range<usize>> = (0..data.len())
        .step_by(CHUNK)
        .map(|start| start..(start + CHUNK).min(data.len()))
        .collect();
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return ranges
            .into_par_iter()
            .map(|r| chunk_partial(prep, data, r, with_grad))
            .collect();
    }
    let _ = parallel;
    ranges
        .into_iter()
        .map(|r| chunk_partial(prep, data, r, with_grad))
        .collect()
}

fn evaluate(
    point: &ProductPoint,
    data: &Dataset,
    with_grad: bool,
    parallel: bool,
) -> Result<(f64, Option<EuclideanGrad>)> {
    let (k, n) = check_point(point, Some(data))?;
    let prep = prepare(point, n);
    let parts = partials(&prep, data, with_grad, parallel);
    let mut total_cost = Compensated::default();
    for p in &parts {
        total_cost.add(p.cost.sum);
        total_cost.add(p.cost.carry);
    }
    let cost = total_cost.value();
    if !with_grad {
        return Ok((cost, None));
    }

    let mut outer = vec![Mat::zeros(n + 1); k];
    let mut mass = vec![0.0; k];
    for p in &parts {
        for j in 0..k {
            outer[j] = outer[j].add(&p.outer[j]);
            mass[j] += p.mass[j];
        }
    }
    let blocks = point
        .blocks
        .iter()
        .zip(outer.iter().zip(&mass))
        .map(|(s, (o, &r))| {
            let s_inv = s.solve(&Mat::identity(n + 1))?;
            Ok(o.sub(&s_inv.scale(r)).scale(-0.5))
        })
        .collect::<Result<Vec<_>>>()?;
    let omega = softmax(&point.weights);
    let total = data.len() as f64;
    let weights = (0..k - 1).map(|j| -(mass[j] - total * omega[j])).collect();
    Ok((cost, Some(EuclideanGrad { blocks, weights })))
}

/// Negative log-likelihood `−Σ_i ln Σ_j ω_j q(y_i; S_j)`.
pub fn nll_cost(point: &ProductPoint, data: &Dataset) -> Result<f64> {
    Ok(evaluate(point, data, false, false)?.0)
}

/// Euclidean gradient of [`nll_cost`] in the blocks and the logits.
pub fn euclid_grad(point: &ProductPoint, data: &Dataset) -> Result<EuclideanGrad> {
    Ok(evaluate(point, data, true, false)?.1.expect("gradient requested"))
}

/// `r_ij = ω_j q(y_i; S_j) / Σ_l ω_l q(y_i; S_l)`, one row per point.
pub fn responsibilities(point: &ProductPoint, data: &Dataset) -> Result<Vec<Vec<f64>>> {
    let (k, n) = check_point(point, Some(data))?;
    let prep = prepare(point, n);
    Ok((0..data.len())
        .map(|i| {
            let y = data.augmented(i);
            let logs: Vec<f64> = (0..k)
                .map(|j| prep.offsets[j] - 0.5 * prep.blocks[j].quad_form_inv(y))
                .collect();
            let lse = log_sum_exp(&logs);
            logs.iter().map(|l| (l - lse).exp()).collect()
        })
        .collect())
}

/// The mixture negative log-likelihood as a solver [`Problem`].
#[derive(Debug, Clone, Copy)]
pub struct GmmProblem<'a> {
    pub data: &'a Dataset,
    /// Evaluate chunks on the rayon pool (needs the `parallel` feature).
    pub parallel: bool,
}

impl<'a> GmmProblem<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        Self { data, parallel: false }
    }
}

impl Problem for GmmProblem<'_> {
    fn cost(&self, at: &ProductPoint) -> Result<f64> {
        Ok(evaluate(at, self.data, false, self.parallel)?.0)
    }

    fn cost_and_grad(&self, at: &ProductPoint) -> Result<(f64, EuclideanGrad)> {
        let (cost, grad) = evaluate(at, self.data, true, self.parallel)?;
        Ok((cost, grad.expect("gradient requested")))
    }
}
