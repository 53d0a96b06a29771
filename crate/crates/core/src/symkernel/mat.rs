use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use super::counters::{count_cubic, count_quadratic};
use crate::error::{Error, Result};

/// Dense square matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds from a row-major slice of length `n * n`.
    pub fn from_row_slice(n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        Ok(Self {
            n,
            data: values.to_vec(),
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        count_quadratic();
        Mat::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.n, rhs.n, "matmul dimension mismatch");
        count_cubic();
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · rhsᵀ`
    pub fn matmul_t(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.n, rhs.n, "matmul dimension mismatch");
        count_cubic();
        let n = self.n;
        Mat::from_fn(n, |i, j| {
            let a = &self.data[i * n..(i + 1) * n];
            let b = &rhs.data[j * n..(j + 1) * n];
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        })
    }

    /// `self · m · selfᵀ`, symmetrized.
    pub fn congruence(&self, m: &SymMat) -> SymMat {
        SymMat::symmetrize(self.matmul(m).matmul_t(self))
    }

    pub fn add(&self, rhs: &Mat) -> Mat {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Mat) -> Mat {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Mat {
        count_quadratic();
        Mat {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    fn zip_with(&self, rhs: &Mat, f: impl Fn(f64, f64) -> f64) -> Mat {
        assert_eq!(self.n, rhs.n, "elementwise dimension mismatch");
        count_quadratic();
        Mat {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        count_quadratic();
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Solves `L X = B` for lower-triangular `L = self`.
    pub fn lower_solve(&self, b: &Mat) -> Mat {
        assert_eq!(self.n, b.n, "triangular solve dimension mismatch");
        count_cubic();
        let n = self.n;
        let mut x = b.clone();
        for col in 0..n {
            for i in 0..n {
                let mut acc = x[(i, col)];
                for k in 0..i {
                    acc -= self[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = acc / self[(i, i)];
            }
        }
        x
    }

    /// Solves `Lᵀ X = B` for lower-triangular `L = self`.
    pub fn lower_t_solve(&self, b: &Mat) -> Mat {
        assert_eq!(self.n, b.n, "triangular solve dimension mismatch");
        count_cubic();
        let n = self.n;
        let mut x = b.clone();
        for col in 0..n {
            for i in (0..n).rev() {
                let mut acc = x[(i, col)];
                for k in i + 1..n {
                    acc -= self[(k, i)] * x[(k, col)];
                }
                x[(i, col)] = acc / self[(i, i)];
            }
        }
        x
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = self.data.chunks(self.n.max(1)).collect();
        f.debug_list().entries(rows).finish()
    }
}

/// Dense symmetric matrix. Tangent vectors and gradients are stored as these.
///
/// Every constructor averages the matrix with its transpose, so the stored
/// entries are exactly symmetric.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymMat(Mat);

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        Self(Mat::zeros(n))
    }

    pub fn identity(n: usize) -> Self {
        Self(Mat::identity(n))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self(Mat::from_diag(diag))
    }

    /// `(m + mᵀ) / 2`
    pub fn symmetrize(mut m: Mat) -> Self {
        let n = m.n;
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Self(m)
    }

    /// Accepts `m` if it is symmetric to within `1e-12 · (1 + max|a_ij|)`.
    pub fn try_from_mat(m: Mat) -> Result<Self> {
        let tol = 1e-12 * (1.0 + m.max_abs());
        if m.asymmetry() > tol {
            return Err(Error::InvalidInput(format!(
                "matrix is not symmetric (asymmetry {:.3e})",
                m.asymmetry()
            )));
        }
        Ok(Self::symmetrize(m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::try_from_mat(Mat::from_rows(rows)?)
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    pub fn add(&self, rhs: &SymMat) -> SymMat {
        SymMat(self.0.add(&rhs.0))
    }

    pub fn sub(&self, rhs: &SymMat) -> SymMat {
        SymMat(self.0.sub(&rhs.0))
    }

    pub fn scale(&self, s: f64) -> SymMat {
        SymMat(self.0.scale(s))
    }

    /// `self + a · x`
    pub fn axpy(&self, a: f64, x: &SymMat) -> SymMat {
        SymMat(self.0.zip_with(&x.0, |s, v| s + a * v))
    }

    /// Symmetric square `self · self`.
    pub fn square(&self) -> SymMat {
        SymMat::symmetrize(self.0.matmul(&self.0))
    }
}

impl Deref for SymMat {
    type Target = Mat;

    fn deref(&self) -> &Mat {
        &self.0
    }
}

impl fmt::Debug for SymMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `tr(a · b)` for symmetric inputs, i.e. `Σ_ij a_ij b_ij`. Quadratic cost.
pub fn frob_inner(a: &SymMat, b: &SymMat) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    count_quadratic();
    Ok(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum())
}
