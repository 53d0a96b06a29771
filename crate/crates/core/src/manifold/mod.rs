//! Operators on the SPD manifold under three tangent-space representations.
//!
//! * `Classical` stores a tangent vector `ξ` as is and uses the
//!   affine-invariant metric `tr(Σ⁻¹ ξ Σ⁻¹ η)`.
//! * `InverseSqrt` stores `ξ' = Σ^{-1/2} ξ Σ^{-1/2}`.
//! * `Cholesky` stores `ξ' = L⁻¹ ξ L⁻ᵀ` with `Σ = L Lᵀ`.
//!
//! In both mapped representations the metric is the Frobenius inner product
//! and vector transport (and its adjoint) is the identity on stored values.
//! Mapped-mode metric and transport never touch an O(n³) kernel.

mod product;
mod tangent;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use product::{ProductPoint, ProductTangent};
pub use tangent::TangentVec;

use crate::error::{Error, Result};
use crate::symkernel::{frob_inner, sym_expm, Mat, SpdPoint, SymMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingMode {
    Classical,
    InverseSqrt,
    Cholesky,
}

impl MappingMode {
    pub const ALL: [MappingMode; 3] = [MappingMode::InverseSqrt, MappingMode::Cholesky, MappingMode::Classical];

    pub fn is_mapped(self) -> bool {
        !matches!(self, MappingMode::Classical)
    }

    /// Short label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            MappingMode::Classical => "rlbfgs",
            MappingMode::InverseSqrt => "vtf_isr",
            MappingMode::Cholesky => "vtf_chol",
        }
    }
}

impl std::str::FromStr for MappingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classical" | "rlbfgs" | "none" => Ok(MappingMode::Classical),
            "inverse_sqrt" | "isr" | "vtf_isr" => Ok(MappingMode::InverseSqrt),
            "cholesky" | "chol" | "vtf_chol" => Ok(MappingMode::Cholesky),
            other => Err(Error::InvalidInput(format!("unknown mapping mode `{other}`"))),
        }
    }
}

/// Which factor the classical transport `E ξ Eᵀ` uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalTransport {
    /// `E = Σ₂^{1/2} Σ₁^{-1/2}`
    #[default]
    EigenRoot,
    /// `E = L₂ L₁⁻¹`
    CholeskyFactor,
}

/// How a tangent step is turned into a new point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    #[default]
    ExpMap,
    /// Second-order Taylor expansion of the exponential map.
    TaylorRetraction,
}

/// SPD-manifold operators for one representation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub mode: MappingMode,
    pub classical_transport: ClassicalTransport,
}

impl Geometry {
    pub fn new(mode: MappingMode) -> Self {
        Self {
            mode,
            classical_transport: ClassicalTransport::default(),
        }
    }

    pub fn with_classical_transport(mut self, t: ClassicalTransport) -> Self {
        self.classical_transport = t;
        self
    }

    fn check_mode(&self, v: &TangentVec) -> Result<()> {
        if v.mode() != self.mode {
            return Err(Error::ModeMismatch {
                left: self.mode,
                right: v.mode(),
            });
        }
        Ok(())
    }

    /// Riemannian inner product of two tangent vectors at the same base.
    pub fn metric(&self, xi: &TangentVec, eta: &TangentVec) -> Result<f64> {
        self.check_mode(xi)?;
        self.check_mode(eta)?;
        if xi.dim() != eta.dim() {
            return Err(Error::DimensionMismatch {
                expected: xi.dim(),
                got: eta.dim(),
            });
        }
        if !Arc::ptr_eq(xi.base(), eta.base()) {
            return Err(Error::BaseMismatch);
        }
        match self.mode {
            MappingMode::Classical => {
                let base = xi.base();
                let a = base.solve(xi.value())?;
                let b = base.solve(eta.value())?;
                Ok(trace_of_product(&a, &b))
            }
            MappingMode::InverseSqrt | MappingMode::Cholesky => frob_inner(xi.value(), eta.value()),
        }
    }

    pub fn norm(&self, xi: &TangentVec) -> Result<f64> {
        Ok(self.metric(xi, xi)?.max(0.0).sqrt())
    }

    /// Riemannian gradient from a Euclidean gradient `g`:
    /// `½ A (g + gᵀ) Aᵀ` with `A = Σ`, `Σ^{1/2}` or `Lᵀ` depending on mode.
    pub fn egrad_to_rgrad(&self, base: &Arc<SpdPoint>, g: &Mat) -> Result<TangentVec> {
        if g.dim() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: g.dim(),
            });
        }
        let sym = SymMat::symmetrize(g.clone());
        let value = match self.mode {
            MappingMode::Classical => base.mat().congruence(&sym),
            MappingMode::InverseSqrt => base.sqrt()?.congruence(&sym),
            MappingMode::Cholesky => base.chol().transpose().congruence(&sym),
        };
        Ok(TangentVec::new(value, self.mode, base.clone()))
    }

    /// Converts a plain (classical) tangent vector into this mode's representation.
    pub fn map_tangent(&self, base: &Arc<SpdPoint>, xi: &SymMat) -> Result<TangentVec> {
        if xi.dim() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: xi.dim(),
            });
        }
        let value = match self.mode {
            MappingMode::Classical => xi.clone(),
            MappingMode::InverseSqrt => base.invsqrt()?.congruence(xi),
            MappingMode::Cholesky => chol_map(base.chol(), xi),
        };
        Ok(TangentVec::new(value, self.mode, base.clone()))
    }

    /// Inverse of [`Geometry::map_tangent`].
    pub fn unmap_tangent(&self, xi: &TangentVec) -> Result<SymMat> {
        self.check_mode(xi)?;
        let base = xi.base();
        Ok(match self.mode {
            MappingMode::Classical => xi.value().clone(),
            MappingMode::InverseSqrt => base.sqrt()?.congruence(xi.value()),
            MappingMode::Cholesky => base.chol().congruence(xi.value()),
        })
    }

    /// Exponential map along the geodesic leaving `xi.base()` with velocity `xi`.
    pub fn exp_map(&self, xi: &TangentVec) -> Result<SpdPoint> {
        self.check_mode(xi)?;
        let base = xi.base();
        let mat = match self.mode {
            MappingMode::Classical => {
                let whitened = base.invsqrt()?.congruence(xi.value());
                base.sqrt()?.congruence(&sym_expm(&whitened)?)
            }
            MappingMode::InverseSqrt => base.sqrt()?.congruence(&sym_expm(xi.value())?),
            // Σ·exp(L⁻ᵀ ξ' Lᵀ) = L·exp(ξ')·Lᵀ, since L⁻ᵀ ξ' Lᵀ is similar to ξ'.
            MappingMode::Cholesky => base.chol().congruence(&sym_expm(xi.value())?),
        };
        SpdPoint::new(mat)
    }

    /// Second-order Taylor retraction `Σ + ξ + ½ ξ Σ⁻¹ ξ`, written in each mode's terms.
    pub fn retract(&self, xi: &TangentVec) -> Result<SpdPoint> {
        self.check_mode(xi)?;
        let base = xi.base();
        let sigma = base.mat();
        let mat = match self.mode {
            MappingMode::Classical => {
                let v = xi.value();
                let quad = SymMat::symmetrize(v.matmul(&base.solve(v)?));
                sigma.add(v).axpy(0.5, &quad)
            }
            MappingMode::InverseSqrt => {
                let v = xi.value();
                let inner = v.axpy(0.5, &v.square());
                sigma.add(&base.sqrt()?.congruence(&inner))
            }
            MappingMode::Cholesky => {
                // ½ Σ + ½ Ψ Ψᵀ with Ψ = L (I + ξ')
                let n = base.dim();
                let shifted = Mat::identity(n).add(xi.value());
                let psi = base.chol().matmul(&shifted);
                let outer = SymMat::symmetrize(psi.matmul_t(&psi));
                sigma.scale(0.5).axpy(0.5, &outer)
            }
        };
        SpdPoint::new(mat)
    }

    pub fn step(&self, xi: &TangentVec, rule: StepRule) -> Result<SpdPoint> {
        match rule {
            StepRule::ExpMap => self.exp_map(xi),
            StepRule::TaylorRetraction => self.retract(xi),
        }
    }

    /// Vector transport of `xi` from its base to `to`.
    pub fn transport(&self, xi: &TangentVec, to: &Arc<SpdPoint>) -> Result<TangentVec> {
        self.check_mode(xi)?;
        if xi.dim() != to.dim() {
            return Err(Error::DimensionMismatch {
                expected: xi.dim(),
                got: to.dim(),
            });
        }
        if self.mode.is_mapped() {
            return Ok(xi.rebased(to.clone()));
        }
        let value = self.classical_carry(xi.base(), to, xi.value())?;
        Ok(TangentVec::new(value, self.mode, to.clone()))
    }

    /// Adjoint of [`Geometry::transport`] for the pair (`back_to`, `eta.base()`):
    /// maps `eta` at Σ₂ to Σ₁ = `back_to` so that
    /// `g₁(ξ, T*η) = g₂(Tξ, η)`.
    pub fn adjoint_transport(&self, eta: &TangentVec, back_to: &Arc<SpdPoint>) -> Result<TangentVec> {
        self.check_mode(eta)?;
        if eta.dim() != back_to.dim() {
            return Err(Error::DimensionMismatch {
                expected: eta.dim(),
                got: back_to.dim(),
            });
        }
        if self.mode.is_mapped() {
            return Ok(eta.rebased(back_to.clone()));
        }
        // Both classical transports are isometries, so the adjoint is the
        // transport in the reverse direction: F = Σ₁^{1/2} Σ₂^{-1/2} or L₁ L₂⁻¹.
        let value = self.classical_carry(eta.base(), back_to, eta.value())?;
        Ok(TangentVec::new(value, self.mode, back_to.clone()))
    }

    /// `E v Eᵀ` with `E = Σ_to^{1/2} Σ_from^{-1/2}` or `L_to L_from⁻¹`.
    fn classical_carry(&self, from: &SpdPoint, to: &SpdPoint, v: &SymMat) -> Result<SymMat> {
        Ok(match self.classical_transport {
            ClassicalTransport::EigenRoot => {
                let whitened = from.invsqrt()?.congruence(v);
                to.sqrt()?.congruence(&whitened)
            }
            ClassicalTransport::CholeskyFactor => to.chol().congruence(&chol_map(from.chol(), v)),
        })
    }
}

/// `L⁻¹ ξ L⁻ᵀ`
fn chol_map(l: &Mat, xi: &SymMat) -> SymMat {
    let half = l.lower_solve(xi);
    // L⁻¹ (L⁻¹ ξ)ᵀ is the transpose of the symmetric target
    SymMat::symmetrize(l.lower_solve(&half.transpose()))
}

/// `tr(a · b)` without forming the product.
fn trace_of_product(a: &Mat, b: &Mat) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}
