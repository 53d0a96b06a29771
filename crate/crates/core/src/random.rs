//! Random symmetric and SPD matrices.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::symkernel::{Mat, SymMat};

/// Symmetric matrix with standard normal entries on and above the diagonal.
pub fn random_sym<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymMat {
    let mut m = Mat::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = StandardNormal.sample(rng);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    SymMat::symmetrize(m)
}

/// Orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
    }
    Mat::from_fn(n, |i, j| cols[j][i])
}

/// `Q diag(λ) Qᵀ` with random orthogonal `Q` and `ln λ` uniform on `[-spread, spread]`.
pub fn random_spd<R: Rng + ?Sized>(n: usize, spread: f64, rng: &mut R) -> SymMat {
    let q = random_orthogonal(n, rng);
    let lambdas: Vec<f64> = (0..n).map(|_| rng.random_range(-spread..=spread).exp()).collect();
    q.congruence(&SymMat::from_diag(&lambdas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_orthogonal(5, &mut rng);
        let qtq = q.transpose().matmul(&q);
        assert!(qtq.sub(&Mat::identity(5)).max_abs() < 1e-12);
    }

    #[test]
    fn spd_eigenvalues_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_spd(4, 1.0, &mut rng);
        let e = crate::symkernel::sym_eig(&m).unwrap();
        let (lo, hi) = (std::f64::consts::E.recip(), std::f64::consts::E);
        assert!(e
            .values
            .iter()
            .all(|&l| l >= lo * (1.0 - 1e-12) && l <= hi * (1.0 + 1e-12)));
    }
}
