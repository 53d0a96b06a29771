//! Reference computations for tests.
//!
//! Everything here works on plain `Vec`s and nalgebra and never touches the
//! implementation crates, so the checks stay independent of the code paths
//! they verify.

use nalgebra::{DMatrix, DVector};

fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let cols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Matrix exponential of a general square matrix by scaling and squaring
/// around a truncated Taylor series.
pub fn expm_taylor(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    to_rows(&expm_dense(&to_dmatrix(rows)))
}

pub fn expm_dense(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.abs().row_sum().max();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// One BFGS inverse-Hessian update applied to `p`:
/// `H₁ = Vᵀ H₀ V + ρ s sᵀ`, `V = I − ρ y sᵀ`, `ρ = 1 / (yᵀ s)`, `H₀ = h0 · I`.
pub fn dense_bfgs_inverse_apply(h0: f64, s: &[f64], y: &[f64], p: &[f64]) -> Vec<f64> {
    let d = s.len();
    let s = DVector::from_column_slice(s);
    let y = DVector::from_column_slice(y);
    let p = DVector::from_column_slice(p);
    let rho = 1.0 / y.dot(&s);
    let v = DMatrix::<f64>::identity(d, d) - rho * &y * s.transpose();
    let h0 = DMatrix::<f64>::identity(d, d) * h0;
    let h1 = v.transpose() * h0 * &v + rho * &s * s.transpose();
    (h1 * p).iter().copied().collect()
}

/// Applies a chain of dense BFGS inverse updates, oldest pair first.
pub fn dense_lbfgs_apply(h0: f64, pairs: &[(Vec<f64>, Vec<f64>)], p: &[f64]) -> Vec<f64> {
    let d = p.len();
    let mut h = DMatrix::<f64>::identity(d, d) * h0;
    for (s, y) in pairs {
        let s = DVector::from_column_slice(s);
        let y = DVector::from_column_slice(y);
        let rho = 1.0 / y.dot(&s);
        let v = DMatrix::<f64>::identity(d, d) - rho * &y * s.transpose();
        h = v.transpose() * h * &v + rho * &s * s.transpose();
    }
    (h * DVector::from_column_slice(p)).iter().copied().collect()
}

/// Log density of `N(x; mu, cov)`.
pub fn gaussian_log_pdf(x: &[f64], mu: &[f64], cov: &[Vec<f64>]) -> f64 {
    let n = x.len();
    let cov = to_dmatrix(cov);
    let diff = DVector::from_column_slice(x) - DVector::from_column_slice(mu);
    let chol = cov.cholesky().expect("covariance must be positive definite");
    let sol = chol.solve(&diff);
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + diff.dot(&sol))
}

/// Negative log-likelihood of a Gaussian mixture, evaluated directly.
pub fn gmm_nll(points: &[Vec<f64>], weights: &[f64], means: &[Vec<f64>], covs: &[Vec<Vec<f64>>]) -> f64 {
    points
        .iter()
        .map(|x| {
            let logs: Vec<f64> = (0..weights.len())
                .map(|j| weights[j].ln() + gaussian_log_pdf(x, &means[j], &covs[j]))
                .collect();
            let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            -(m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln())
        })
        .sum()
}

/// `tr(A⁻¹ X A⁻¹ Y)` through an explicit dense inverse.
pub fn affine_invariant_metric(a: &[Vec<f64>], x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let inv = to_dmatrix(a).try_inverse().expect("invertible");
    (&inv * to_dmatrix(x) * &inv * to_dmatrix(y)).trace()
}

/// Symmetric eigenvalues (ascending) from nalgebra.
pub fn sym_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let mut v: Vec<f64> = to_dmatrix(a).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Dense product of general square matrices.
pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    to_rows(&(to_dmatrix(a) * to_dmatrix(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_rotation_generator() {
        let t = 0.7;
        let e = expm_taylor(&[vec![0.0, -t], vec![t, 0.0]]);
        assert!((e[0][0] - t.cos()).abs() < 1e-13);
        assert!((e[1][0] - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn bfgs_update_satisfies_secant() {
        let s = [1.0, 0.5, -0.2];
        let y = [0.8, 0.9, 0.1];
        let hy = dense_bfgs_inverse_apply(0.3, &s, &y, &y);
        for (a, b) in hy.iter().zip(s) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standard_normal_density_at_origin() {
        let lp = gaussian_log_pdf(&[0.0, 0.0], &[0.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!((lp + (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
    }
}
