use std::fmt;
use std::sync::Arc;

use super::MappingMode;
use crate::symkernel::{SpdPoint, SymMat};

/// A tangent vector at an SPD point, stored in one mode's representation.
///
/// The base point and mode travel with the value. Arithmetic between vectors
/// at different bases or in different modes is a bug and panics.
#[derive(Clone)]
pub struct TangentVec {
    value: SymMat,
    mode: MappingMode,
    base: Arc<SpdPoint>,
}

impl TangentVec {
    pub fn new(value: SymMat, mode: MappingMode, base: Arc<SpdPoint>) -> Self {
        assert_eq!(value.dim(), base.dim(), "tangent value and base point dims differ");
        Self { value, mode, base }
    }

    pub fn zero(mode: MappingMode, base: Arc<SpdPoint>) -> Self {
        Self::new(SymMat::zeros(base.dim()), mode, base)
    }

    pub fn value(&self) -> &SymMat {
        &self.value
    }

    pub fn into_value(self) -> SymMat {
        self.value
    }

    pub fn mode(&self) -> MappingMode {
        self.mode
    }

    pub fn base(&self) -> &Arc<SpdPoint> {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.value.dim()
    }

    pub fn same_space(&self, other: &TangentVec) -> bool {
        self.mode == other.mode && Arc::ptr_eq(&self.base, &other.base)
    }

    fn check_compatible(&self, other: &TangentVec) {
        assert_eq!(self.mode, other.mode, "mixing tangent vectors of different modes");
        assert!(
            Arc::ptr_eq(&self.base, &other.base),
            "mixing tangent vectors at different base points"
        );
    }

    pub fn scale(&self, s: f64) -> TangentVec {
        Self {
            value: self.value.scale(s),
            mode: self.mode,
            base: self.base.clone(),
        }
    }

    /// `self + a · x`
    pub fn axpy(&self, a: f64, x: &TangentVec) -> TangentVec {
        self.check_compatible(x);
        Self {
            value: self.value.axpy(a, &x.value),
            mode: self.mode,
            base: self.base.clone(),
        }
    }

    pub fn sub(&self, x: &TangentVec) -> TangentVec {
        self.axpy(-1.0, x)
    }

    /// Same value, now read as living at `base`. Only valid where the
    /// transport is the identity.
    pub(crate) fn rebased(&self, base: Arc<SpdPoint>) -> TangentVec {
        Self {
            value: self.value.clone(),
            mode: self.mode,
            base,
        }
    }
}

impl fmt::Debug for TangentVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TangentVec")
            .field("mode", &self.mode)
            .field("value", &self.value)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[should_panic(expected = "different base points")]
    fn cross_base_arithmetic_panics() {
        let a = TangentVec::zero(MappingMode::Cholesky, Arc::new(SpdPoint::identity(2)));
        let b = TangentVec::zero(MappingMode::Cholesky, Arc::new(SpdPoint::identity(2)));
        let _ = a.axpy(1.0, &b);
    }

    #[test]
    #[should_panic(expected = "different modes")]
    fn cross_mode_arithmetic_panics() {
        let base = Arc::new(SpdPoint::identity(2));
        let a = TangentVec::zero(MappingMode::Cholesky, base.clone());
        let b = TangentVec::zero(MappingMode::InverseSqrt, base);
        let _ = a.axpy(1.0, &b);
    }
}
