use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, GmmParams};
use crate::error::{Error, Result};
use crate::random::random_spd;
use crate::symkernel::{cholesky, sym_eig};

/// Mean-draw budget before a box is declared too small.
pub const MAX_SEPARATION_TRIALS: usize = 100_000;

/// How far apart mixture means are relative to component spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationLevel {
    Low,
    Mid,
    High,
}

impl SeparationLevel {
    pub const ALL: [SeparationLevel; 3] = [SeparationLevel::Low, SeparationLevel::Mid, SeparationLevel::High];

    pub fn coefficient(self) -> f64 {
        match self {
            SeparationLevel::Low => 0.2,
            SeparationLevel::Mid => 1.0,
            SeparationLevel::High => 5.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SeparationLevel::Low => "low",
            SeparationLevel::Mid => "mid",
            SeparationLevel::High => "high",
        }
    }
}

impl std::str::FromStr for SeparationLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(SeparationLevel::Low),
            "mid" | "medium" => Ok(SeparationLevel::Mid),
            "high" => Ok(SeparationLevel::High),
            other => Err(Error::InvalidInput(format!("unknown separation level `{other}`"))),
        }
    }
}

/// Draws a mixture with separation coefficient `c` and samples `len` points.
///
/// Covariances are `Q diag(λ) Qᵀ` with `ln λ` uniform on `[-1, 1]`. Means are
/// drawn uniformly from `[-half_width, half_width]ⁿ` one at a time, each
/// redrawn until it is at least `c √(n max(λ_max(Σ_i), λ_max(Σ_j)))` from
/// every earlier mean. Weights are uniform.
pub fn sample_gmm_with<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    len: usize,
    c: f64,
    half_width: f64,
    rng: &mut R,
) -> Result<(Dataset, GmmParams)> {
    if k == 0 || n == 0 || len == 0 {
        return Err(Error::InvalidInput("K, n and N must be positive".into()));
    }
    let covs: Vec<_> = (0..k).map(|_| random_spd(n, 1.0, rng)).collect();
    let lambda_max = covs
        .iter()
        .map(|c| sym_eig(c).map(|e| *e.values.last().expect("n > 0")))
        .collect::<Result<Vec<f64>>>()?;

    let mut means: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut trials = 0;
    while means.len() < k {
        if trials == MAX_SEPARATION_TRIALS {
            return Err(Error::SeparationUnsatisfiable { k, trials });
        }
        trials += 1;
        let j = means.len();
        let candidate: Vec<f64> = (0..n).map(|_| rng.random_range(-half_width..=half_width)).collect();
        let separated = means.iter().enumerate().all(|(i, m)| {
            let dist = m
                .iter()
                .zip(&candidate)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            dist >= c * (n as f64 * lambda_max[i].max(lambda_max[j])).sqrt()
        });
        if separated {
            means.push(candidate);
        }
    }

    let factors = covs.iter().map(cholesky).collect::<Result<Vec<_>>>()?;
    let mut flat = Vec::with_capacity(len * n);
    for _ in 0..len {
        let j = rng.random_range(0..k);
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let l = &factors[j];
        for a in 0..n {
            let lz: f64 = (0..=a).map(|b| l[(a, b)] * z[b]).sum();
            flat.push(means[j][a] + lz);
        }
    }
    let params = GmmParams {
        weights: vec![1.0 / k as f64; k],
        means,
        covs,
    };
    Ok((Dataset::from_flat(n, flat)?, params))
}

/// [`sample_gmm_with`] for a separation level, doubling the sampling box
/// whenever the separation constraint cannot be met.
pub fn sample_gmm<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    len: usize,
    sep: SeparationLevel,
    rng: &mut R,
) -> Result<(Dataset, GmmParams)> {
    let c = sep.coefficient();
    let mut half_width = c * (n as f64 * std::f64::consts::E).sqrt() * (k as f64).powf(1.0 / n as f64);
    loop {
        match sample_gmm_with(k, n, len, c, half_width, rng) {
            Err(Error::SeparationUnsatisfiable { .. }) if half_width < 1e12 => half_width *= 2.0,
            other => return other,
        }
    }
}
