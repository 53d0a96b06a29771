//! Gaussian mixture fitting over a product of SPD manifolds.
//!
//! Each component `(μ_j, Σ_j)` is lifted to one SPD matrix of dimension
//! `n + 1`,
//!
//! ```text
//! S_j = [[Σ_j + μ_j μ_jᵀ, μ_j], [μ_jᵀ, 1]],
//! ```
//!
//! evaluated on augmented points `y = [x; 1]` through the surrogate density
//! `q(y; S) = (2π)^{1/2} e^{1/2} N(y; 0, S)`. At block-structured `S` this
//! equals `N(x; μ, Σ)` exactly. Mixing weights are a softmax of `K − 1` free
//! logits with the last one pinned to zero.

mod dataset;
mod init;
mod model;
mod sample;

pub use dataset::Dataset;
pub use init::{kmeanspp_init, kmeanspp_seed, seeding_weights, InitStrategy, KmeansOptions};
pub use model::{euclid_grad, init_point, nll_cost, recover_params, responsibilities, softmax, GmmParams, GmmProblem};
pub use sample::{sample_gmm, sample_gmm_with, SeparationLevel, MAX_SEPARATION_TRIALS};
