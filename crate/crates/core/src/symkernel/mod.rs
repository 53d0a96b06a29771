//! Dense symmetric and SPD matrix kernels.
//!
//! All O(n³) work in the crate happens here, which is what lets
//! [`KernelCounters`] account for it.

mod counters;
mod eig;
mod mat;
mod spd;

pub use counters::{CounterScope, KernelCounters};
pub use eig::{sym_eig, sym_expm, SymEig, MAX_SWEEPS};
pub use mat::{frob_inner, Mat, SymMat};
pub use spd::{cholesky, cholesky_factor, spd_invsqrt, spd_solve, spd_sqrt, SpdPoint, PIVOT_GUARD};
