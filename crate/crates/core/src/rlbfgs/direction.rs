use std::sync::Arc;

use crate::error::{Error, Result};
use crate::manifold::{Geometry, ProductPoint, ProductTangent};

/// Scale of the initial inverse-Hessian approximation `H₀ = h·I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H0Scale(f64);

impl H0Scale {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidInput(format!(
                "H0 scale must be positive and finite, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// One stored curvature pair.
///
/// `s` and `y` live at `base` (the iterate the pair was formed at). `prev` is
/// the iterate before it, where the recursion lands after the oldest pair.
#[derive(Debug, Clone)]
pub struct MemoryPair {
    pub s: ProductTangent,
    pub y: ProductTangent,
    pub g_sy: f64,
    pub g_ss: f64,
    base: ProductPoint,
    prev: ProductPoint,
}

impl MemoryPair {
    /// Builds a pair, refusing it when `g(s,y) <= guard * g(s,s)`.
    pub fn new(
        geom: &Geometry,
        s: ProductTangent,
        y: ProductTangent,
        base: ProductPoint,
        prev: ProductPoint,
        guard: f64,
    ) -> Result<Self> {
        let g_sy = geom.product_metric(&s, &y)?;
        let g_ss = geom.product_metric(&s, &s)?;
        if !(g_sy > guard * g_ss) || !g_sy.is_finite() {
            return Err(Error::CurvatureBreakdown { g_sy });
        }
        Ok(Self {
            s,
            y,
            g_sy,
            g_ss,
            base,
            prev,
        })
    }

    pub fn base(&self) -> &ProductPoint {
        &self.base
    }

    pub fn prev(&self) -> &ProductPoint {
        &self.prev
    }
}

/// Applies the limited-memory inverse Hessian to `p` using the newest `depth`
/// pairs of `memory` (ordered oldest first).
///
/// `p` must live at the base of the newest pair used.
pub fn get_direction(
    geom: &Geometry,
    p: &ProductTangent,
    depth: usize,
    memory: &[MemoryPair],
    h0: H0Scale,
) -> Result<ProductTangent> {
    if depth > memory.len() {
        return Err(Error::InvalidInput(format!(
            "recursion depth {depth} exceeds {} stored pairs",
            memory.len()
        )));
    }
    recurse(geom, p, &memory[memory.len() - depth..], h0)
}

fn recurse(geom: &Geometry, p: &ProductTangent, pairs: &[MemoryPair], h0: H0Scale) -> Result<ProductTangent> {
    let Some((pair, older)) = pairs.split_last() else {
        return Ok(p.scale(h0.value()));
    };
    // a pair refused by the curvature guard leaves the iterate ahead of the
    // newest stored base; bridge that gap with one more transport pair
    if !lives_at(p, &pair.base) {
        let here = p.base_point(pair.base.weights.clone());
        let lowered = geom.product_adjoint(p, &pair.base)?;
        let result = recurse(geom, &lowered, pairs, h0)?;
        return geom.product_transport(&result, &here);
    }
    let rho = pair.g_sy.recip();

    let p_tilde = p.axpy(-rho * geom.product_metric(&pair.s, p)?, &pair.y);
    let back_to = older.last().map_or(&pair.prev, |o| &o.base);
    let lowered = geom.product_adjoint(&p_tilde, back_to)?;
    let inner = recurse(geom, &lowered, older, h0)?;
    let p_hat = geom.product_transport(&inner, &pair.base)?;

    let correction = rho * geom.product_metric(&pair.y, &p_hat)?;
    let along_s = rho * geom.product_metric(&pair.s, p)?;
    Ok(p_hat.axpy(along_s - correction, &pair.s))
}

fn lives_at(t: &ProductTangent, at: &ProductPoint) -> bool {
    t.blocks.len() == at.blocks.len() && t.blocks.iter().zip(&at.blocks).all(|(v, b)| Arc::ptr_eq(v.base(), b))
}
