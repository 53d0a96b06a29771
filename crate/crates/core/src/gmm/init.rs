use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, GmmParams};
use crate::error::{Error, Result};
use crate::symkernel::{Mat, SymMat};

/// What K-means++ contributes to the initial mixture.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Seeds, one hard assignment, then per-cluster mean, covariance and
    /// cluster fractions.
    #[default]
    HardAssignment,
    /// Seeds become the means; every component starts from the pooled data
    /// covariance with uniform weights.
    Seeding,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmeansOptions {
    pub strategy: InitStrategy,
    /// Lloyd refinements after the first hard assignment.
    pub lloyd_iters: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Squared distance from each point to its nearest chosen center.
pub fn seeding_weights(data: &Dataset, chosen: &[usize]) -> Vec<f64> {
    data.points()
        .map(|p| {
            chosen
                .iter()
                .map(|&c| sq_dist(p, data.point(c)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Indices of `k` K-means++ seeds.
pub fn kmeanspp_seed<R: Rng + ?Sized>(data: &Dataset, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k == 0 || data.len() < k {
        return Err(Error::InvalidInput(format!(
            "cannot seed {k} centers from {} points",
            data.len()
        )));
    }
    let mut chosen = vec![rng.random_range(0..data.len())];
    while chosen.len() < k {
        let w = seeding_weights(data, &chosen);
        let next = match WeightedIndex::new(&w) {
            Ok(dist) => dist.sample(rng),
            // every remaining point coincides with a center
            Err(_) => rng.random_range(0..data.len()),
        };
        chosen.push(next);
    }
    Ok(chosen)
}

fn assign(data: &Dataset, centers: &[Vec<f64>]) -> Vec<usize> {
    data.points()
        .map(|p| {
            (0..centers.len())
                .min_by(|&a, &b| sq_dist(p, &centers[a]).total_cmp(&sq_dist(p, &centers[b])))
                .expect("at least one center")
        })
        .collect()
}

fn means(data: &Dataset, labels: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = data.dim();
    let mut sums = vec![vec![0.0; n]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in data.points().zip(labels) {
        counts[l] += 1;
        sums[l].iter_mut().zip(p).for_each(|(s, v)| *s += v);
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    (sums, counts)
}

/// Re-seeds empty clusters from the point farthest from its own center.
fn fill_empty(data: &Dataset, centers: &mut [Vec<f64>], labels: &mut Vec<usize>) -> Result<()> {
    let k = centers.len();
    for _ in 0..k {
        let (_, counts) = means(data, labels, k);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return Ok(());
        };
        let far = (0..data.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                sq_dist(data.point(a), &centers[labels[a]]).total_cmp(&sq_dist(data.point(b), &centers[labels[b]]))
            })
            .ok_or(Error::DegenerateCluster { cluster: empty })?;
        centers[empty] = data.point(far).to_vec();
        labels[far] = empty;
    }
    let (_, counts) = means(data, labels, k);
    match counts.iter().position(|&c| c == 0) {
        Some(cluster) => Err(Error::DegenerateCluster { cluster }),
        None => Ok(()),
    }
}

/// Average per-coordinate variance of the data.
fn average_variance(data: &Dataset) -> f64 {
    let (mu, _) = means(data, &vec![0; data.len()], 1);
    let total: f64 = data.points().map(|p| sq_dist(p, &mu[0])).sum();
    total / (data.len() * data.dim()) as f64
}

/// Initial mixture from K-means++ seeds.
///
/// With [`InitStrategy::HardAssignment`] the points are assigned to their
/// nearest seed (plus `lloyd_iters` refinements) and each cluster yields its
/// mean, covariance normalized by cluster size, and fraction of the data.
/// Covariances get a ridge `ε I` with `ε = 1e-6 ×` the average data
/// variance, or `1e-6` for zero-variance data.
pub fn kmeanspp_init<R: Rng + ?Sized>(
    data: &Dataset,
    k: usize,
    options: KmeansOptions,
    rng: &mut R,
) -> Result<GmmParams> {
    let seeds = kmeanspp_seed(data, k, rng)?;
    let mut centers: Vec<Vec<f64>> = seeds.iter().map(|&i| data.point(i).to_vec()).collect();
    if options.strategy == InitStrategy::Seeding {
        let pooled = params_from_labels(data, &vec![0; data.len()], 1)?;
        let params = GmmParams {
            weights: vec![1.0 / k as f64; k],
            means: centers,
            covs: vec![pooled.covs[0].clone(); k],
        };
        params.validate()?;
        return Ok(params);
    }
    let mut labels = assign(data, &centers);
    fill_empty(data, &mut centers, &mut labels)?;
    for _ in 0..options.lloyd_iters {
        centers = means(data, &labels, k).0;
        labels = assign(data, &centers);
        fill_empty(data, &mut centers, &mut labels)?;
    }
    params_from_labels(data, &labels, k)
}

fn params_from_labels(data: &Dataset, labels: &[usize], k: usize) -> Result<GmmParams> {
    let n = data.dim();
    let var = average_variance(data);
    let eps = if var > 0.0 { 1e-6 * var } else { 1e-6 };
    let (mus, counts) = means(data, labels, k);
    let mut scatter = vec![Mat::zeros(n); k];
    for (p, &l) in data.points().zip(labels) {
        let mu = &mus[l];
        let acc = &mut scatter[l];
        for a in 0..n {
            for b in 0..n {
                acc[(a, b)] += (p[a] - mu[a]) * (p[b] - mu[b]);
            }
        }
    }
    let covs = scatter
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| SymMat::symmetrize(s.scale(1.0 / c as f64).add(&Mat::identity(n).scale(eps))))
        .collect();
    let total = data.len() as f64;
    let params = GmmParams {
        weights: counts.iter().map(|&c| c as f64 / total).collect(),
        means: mus,
        covs,
    };
    params.validate()?;
    Ok(params)
}
