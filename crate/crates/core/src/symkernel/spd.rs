use std::fmt;
use std::sync::OnceLock;

use super::counters::count_cubic;
use super::eig::{sym_eig, SymEig};
use super::mat::{Mat, SymMat};
use crate::error::{Error, Result};

/// Pivots below this fraction of the largest diagonal entry are treated as
/// a failed factorization.
pub const PIVOT_GUARD: f64 = 1e-13;

/// Lower-triangular Cholesky factor of `m`.
pub fn cholesky(m: &SymMat) -> Result<Mat> {
    count_cubic();
    let n = m.dim();
    let max_diag = (0..n).fold(0.0_f64, |acc, i| acc.max(m[(i, i)]));
    let floor = PIVOT_GUARD * max_diag;
    let mut l = Mat::zeros(n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut acc = m[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / ljj;
        }
    }
    Ok(l)
}

/// A symmetric positive definite matrix with memoized factorizations.
///
/// Construction runs the Cholesky factorization, which doubles as the
/// positive-definiteness test. The eigendecomposition and the square roots
/// are filled in on first use; the caches are thread-safe.
pub struct SpdPoint {
    mat: SymMat,
    chol: Mat,
    eig: OnceLock<Result<SymEig>>,
    sqrt: OnceLock<Result<SymMat>>,
    invsqrt: OnceLock<Result<SymMat>>,
}

impl SpdPoint {
    pub fn new(mat: SymMat) -> Result<Self> {
        let chol = cholesky(&mat)?;
        Ok(Self {
            mat,
            chol,
            eig: OnceLock::new(),
            sqrt: OnceLock::new(),
            invsqrt: OnceLock::new(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(SymMat::identity(n)).expect("identity is positive definite")
    }

    pub fn mat(&self) -> &SymMat {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// Lower-triangular `L` with `L Lᵀ = Σ`.
    pub fn chol(&self) -> &Mat {
        &self.chol
    }

    pub fn eig(&self) -> Result<&SymEig> {
        self.eig
            .get_or_init(|| {
                let e = sym_eig(&self.mat)?;
                if let Some(&min) = e.values.first() {
                    if min <= 0.0 {
                        return Err(Error::NotPositiveDefinite { index: 0, pivot: min });
                    }
                }
                Ok(e)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `Σ^{1/2}`
    pub fn sqrt(&self) -> Result<&SymMat> {
        self.sqrt
            .get_or_init(|| Ok(self.eig()?.map_spectrum(f64::sqrt)))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `Σ^{-1/2}`
    pub fn invsqrt(&self) -> Result<&SymMat> {
        self.invsqrt
            .get_or_init(|| Ok(self.eig()?.map_spectrum(|x| 1.0 / x.sqrt())))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `Σ⁻¹ · rhs` through two triangular solves with the Cholesky factor.
    pub fn solve(&self, rhs: &Mat) -> Result<Mat> {
        if rhs.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: rhs.dim(),
            });
        }
        Ok(self.chol.lower_t_solve(&self.chol.lower_solve(rhs)))
    }

    /// `log det Σ` from the Cholesky diagonal.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.chol[(i, i)].ln()).sum::<f64>()
    }

    /// `xᵀ Σ⁻¹ x` for a vector `x`.
    pub fn quad_form_inv(&self, x: &[f64]) -> f64 {
        // forward substitution L z = x, result is |z|²
        let n = self.dim();
        let mut z = vec![0.0; n];
        let mut acc = 0.0;
        for i in 0..n {
            let mut v = x[i];
            for k in 0..i {
                v -= self.chol[(i, k)] * z[k];
            }
            z[i] = v / self.chol[(i, i)];
            acc += z[i] * z[i];
        }
        acc
    }

    /// `Σ⁻¹ x` for a vector `x`.
    pub fn solve_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let l = &self.chol;
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut v = x[i];
            for k in 0..i {
                v -= l[(i, k)] * z[k];
            }
            z[i] = v / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut v = z[i];
            for k in i + 1..n {
                v -= l[(k, i)] * z[k];
            }
            z[i] = v / l[(i, i)];
        }
        z
    }
}

impl fmt::Debug for SpdPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpdPoint").field("mat", &self.mat).finish()
    }
}

pub fn cholesky_factor(s: &SpdPoint) -> &Mat {
    s.chol()
}

pub fn spd_sqrt(s: &SpdPoint) -> Result<SymMat> {
    s.sqrt().cloned()
}

pub fn spd_invsqrt(s: &SpdPoint) -> Result<SymMat> {
    s.invsqrt().cloned()
}

pub fn spd_solve(s: &SpdPoint, rhs: &Mat) -> Result<Mat> {
    s.solve(rhs)
}
