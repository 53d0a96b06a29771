//! Riemannian LBFGS on products of SPD manifolds with identity vector
//! transport, obtained by storing tangent vectors in a whitened
//! representation (inverse square root or Cholesky factor of the base
//! point). Includes a Gaussian-mixture fitting problem built on top.

pub mod error;
pub mod gmm;
pub mod manifold;
pub mod random;
pub mod rlbfgs;
pub mod symkernel;

pub use error::{Error, Result};
