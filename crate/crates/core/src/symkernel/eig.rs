use super::counters::count_cubic;
use super::mat::{Mat, SymMat};
use crate::error::{Error, Result};

/// Sweep budget for the cyclic Jacobi eigensolver.
pub const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `m = V · diag(values) · Vᵀ`, eigenvalues ascending.
/// Eigenvectors are the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl SymEig {
    /// `V · diag(f(λ)) · Vᵀ`
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let n = self.vectors.dim();
        let scaled = Mat::from_fn(n, |i, j| self.vectors[(i, j)] * f(self.values[j]));
        SymMat::symmetrize(scaled.matmul_t(&self.vectors))
    }
}

/// Cyclic Jacobi eigensolver.
pub fn sym_eig(m: &SymMat) -> Result<SymEig> {
    count_cubic();
    let n = m.dim();
    let mut a = m.as_mat().clone();
    let mut v = Mat::identity(n);

    let scale = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = f64::EPSILON * 0.5 * scale;
    let mut converged = false;

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(SymEig { values, vectors })
}

/// Matrix exponential of a symmetric matrix via its eigendecomposition.
pub fn sym_expm(m: &SymMat) -> Result<SymMat> {
    Ok(sym_eig(m)?.map_spectrum(f64::exp))
}
