use std::sync::Arc;

use super::{Geometry, StepRule, TangentVec};
use crate::error::{Error, Result};
use crate::symkernel::{Mat, SpdPoint, SymMat};

/// K SPD blocks plus a Euclidean vector.
#[derive(Debug, Clone)]
pub struct ProductPoint {
    pub blocks: Vec<Arc<SpdPoint>>,
    pub weights: Vec<f64>,
}

/// Tangent vector of a [`ProductPoint`]; every block shares one mode.
#[derive(Debug, Clone)]
pub struct ProductTangent {
    pub blocks: Vec<TangentVec>,
    pub weights: Vec<f64>,
}

impl ProductPoint {
    pub fn new(blocks: Vec<SpdPoint>, weights: Vec<f64>) -> Self {
        Self {
            blocks: blocks.into_iter().map(Arc::new).collect(),
            weights,
        }
    }

    pub fn from_matrices(blocks: Vec<SymMat>, weights: Vec<f64>) -> Result<Self> {
        let blocks = blocks.into_iter().map(SpdPoint::new).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(blocks, weights))
    }
}

impl ProductTangent {
    pub fn zero(geom: &Geometry, at: &ProductPoint) -> Self {
        Self {
            blocks: at
                .blocks
                .iter()
                .map(|b| TangentVec::zero(geom.mode, b.clone()))
                .collect(),
            weights: vec![0.0; at.weights.len()],
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.scale(s)).collect(),
            weights: self.weights.iter().map(|w| w * s).collect(),
        }
    }

    /// `self + a · x`
    pub fn axpy(&self, a: f64, x: &ProductTangent) -> Self {
        assert_eq!(self.blocks.len(), x.blocks.len(), "product block count mismatch");
        assert_eq!(self.weights.len(), x.weights.len(), "product weight length mismatch");
        Self {
            blocks: self.blocks.iter().zip(&x.blocks).map(|(s, v)| s.axpy(a, v)).collect(),
            weights: self.weights.iter().zip(&x.weights).map(|(s, v)| s + a * v).collect(),
        }
    }

    pub fn sub(&self, x: &ProductTangent) -> Self {
        self.axpy(-1.0, x)
    }

    /// The point this tangent lives at.
    pub fn base_point(&self, weights: Vec<f64>) -> ProductPoint {
        ProductPoint {
            blocks: self.blocks.iter().map(|b| b.base().clone()).collect(),
            weights,
        }
    }
}

fn check_shape(blocks: usize, weights: usize, p: &ProductPoint) -> Result<()> {
    if blocks != p.blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: p.blocks.len(),
            got: blocks,
        });
    }
    if weights != p.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: p.weights.len(),
            got: weights,
        });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Geometry {
    /// Sum of the block metrics plus the Euclidean product of the weight parts.
    pub fn product_metric(&self, xi: &ProductTangent, eta: &ProductTangent) -> Result<f64> {
        if xi.blocks.len() != eta.blocks.len() || xi.weights.len() != eta.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: xi.blocks.len() + xi.weights.len(),
                got: eta.blocks.len() + eta.weights.len(),
            });
        }
        let mut acc = dot(&xi.weights, &eta.weights);
        for (a, b) in xi.blocks.iter().zip(&eta.blocks) {
            acc += self.metric(a, b)?;
        }
        Ok(acc)
    }

    pub fn product_norm(&self, xi: &ProductTangent) -> Result<f64> {
        Ok(self.product_metric(xi, xi)?.max(0.0).sqrt())
    }

    pub fn product_egrad_to_rgrad(
        &self,
        at: &ProductPoint,
        block_grads: &[Mat],
        weight_grad: &[f64],
    ) -> Result<ProductTangent> {
        check_shape(block_grads.len(), weight_grad.len(), at)?;
        let blocks = at
            .blocks
            .iter()
            .zip(block_grads)
            .map(|(b, g)| self.egrad_to_rgrad(b, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductTangent {
            blocks,
            weights: weight_grad.to_vec(),
        })
    }

    pub fn product_map(&self, at: &ProductPoint, blocks: &[SymMat], weights: &[f64]) -> Result<ProductTangent> {
        check_shape(blocks.len(), weights.len(), at)?;
        let blocks = at
            .blocks
            .iter()
            .zip(blocks)
            .map(|(b, x)| self.map_tangent(b, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductTangent {
            blocks,
            weights: weights.to_vec(),
        })
    }

    pub fn product_unmap(&self, xi: &ProductTangent) -> Result<Vec<SymMat>> {
        xi.blocks.iter().map(|b| self.unmap_tangent(b)).collect()
    }

    /// Moves every block with `rule`; the weight part moves by vector addition.
    pub fn product_step(&self, at: &ProductPoint, xi: &ProductTangent, rule: StepRule) -> Result<ProductPoint> {
        check_shape(xi.blocks.len(), xi.weights.len(), at)?;
        let blocks = xi
            .blocks
            .iter()
            .map(|b| self.step(b, rule).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        let weights = at.weights.iter().zip(&xi.weights).map(|(w, d)| w + d).collect();
        Ok(ProductPoint { blocks, weights })
    }

    pub fn product_transport(&self, xi: &ProductTangent, to: &ProductPoint) -> Result<ProductTangent> {
        check_shape(xi.blocks.len(), xi.weights.len(), to)?;
        let blocks = xi
            .blocks
            .iter()
            .zip(&to.blocks)
            .map(|(b, t)| self.transport(b, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductTangent {
            blocks,
            weights: xi.weights.clone(),
        })
    }

    pub fn product_adjoint(&self, eta: &ProductTangent, back_to: &ProductPoint) -> Result<ProductTangent> {
        check_shape(eta.blocks.len(), eta.weights.len(), back_to)?;
        let blocks = eta
            .blocks
            .iter()
            .zip(&back_to.blocks)
            .map(|(b, t)| self.adjoint_transport(b, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductTangent {
            blocks,
            weights: eta.weights.clone(),
        })
    }
}
