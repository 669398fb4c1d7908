use std::sync::Arc;

use nalgebra::DVector;

use super::domain::QuadratureDomain;
use super::lift;
use crate::error::{GeomError, Result};
use crate::manifold::{Manifold, SecondTangentVector};

/// A map `q : M → N`, one target point per quadrature sample.
#[derive(Debug, Clone)]
pub struct MapField {
    domain: Arc<QuadratureDomain>,
    manifold: Arc<Manifold>,
    values: Vec<DVector<f64>>,
}

impl PartialEq for MapField {
    fn eq(&self, other: &Self) -> bool {
        self.same_space(other) && self.values == other.values
    }
}

impl MapField {
    pub fn new(
        domain: Arc<QuadratureDomain>,
        manifold: Arc<Manifold>,
        values: Vec<DVector<f64>>,
    ) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(GeomError::LengthMismatch {
                expected: domain.len(),
                got: values.len(),
            });
        }
        for (i, x) in values.iter().enumerate() {
            manifold
                .check_point(x)
                .map_err(|e| GeomError::at_sample(i, e))?;
        }
        Ok(Self {
            domain,
            manifold,
            values,
        })
    }

    /// Constant map with value `x`.
    pub fn constant(
        domain: Arc<QuadratureDomain>,
        manifold: Arc<Manifold>,
        x: DVector<f64>,
    ) -> Result<Self> {
        let values = vec![x; domain.len()];
        Self::new(domain, manifold, values)
    }

    pub fn domain(&self) -> &Arc<QuadratureDomain> {
        &self.domain
    }

    pub fn manifold(&self) -> &Arc<Manifold> {
        &self.manifold
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same domain and same target.
    pub fn same_space(&self, other: &MapField) -> bool {
        (Arc::ptr_eq(&self.domain, &other.domain) || self.domain == other.domain)
            && (Arc::ptr_eq(&self.manifold, &other.manifold)
                || self.manifold.name() == other.manifold.name())
    }

    pub(crate) fn check_same_space(&self, other: &MapField) -> Result<()> {
        if !self.same_space(other) {
            return Err(GeomError::FieldMismatch(
                "fields live on different domains or targets".into(),
            ));
        }
        Ok(())
    }

    /// Same map: shared space and identical values.
    pub(crate) fn check_same_map(&self, other: &MapField) -> Result<()> {
        self.check_same_space(other)?;
        if self.values != other.values {
            return Err(GeomError::FieldMismatch(
                "tangent fields have different base maps".into(),
            ));
        }
        Ok(())
    }

    /// `L_f q = f ∘ q` for a pointwise map `f : N → N`.
    pub fn left_compose<F>(&self, f: F) -> Result<MapField>
    where
        F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Sync + Send,
    {
        let values = lift(&self.values, |_, x| f(x))?;
        MapField::new(self.domain.clone(), self.manifold.clone(), values)
    }

    pub(crate) fn from_parts_unchecked(
        domain: Arc<QuadratureDomain>,
        manifold: Arc<Manifold>,
        values: Vec<DVector<f64>>,
    ) -> Self {
        Self {
            domain,
            manifold,
            values,
        }
    }
}

/// A tangent vector `h ∈ T_q C^∞(M, N) = C^∞(M, TN)` at the map `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    base: MapField,
    vecs: Vec<DVector<f64>>,
}

impl TangentField {
    pub fn new(base: MapField, vecs: Vec<DVector<f64>>) -> Result<Self> {
        if vecs.len() != base.len() {
            return Err(GeomError::LengthMismatch {
                expected: base.len(),
                got: vecs.len(),
            });
        }
        for (i, (x, v)) in base.values().iter().zip(&vecs).enumerate() {
            base.manifold()
                .check_tangent(x, v)
                .map_err(|e| GeomError::at_sample(i, e))?;
        }
        Ok(Self { base, vecs })
    }

    pub fn zeros(base: MapField) -> Self {
        let n = base.manifold().coord_dim();
        let vecs = vec![DVector::zeros(n); base.len()];
        Self { base, vecs }
    }

    pub(crate) fn from_parts_unchecked(base: MapField, vecs: Vec<DVector<f64>>) -> Self {
        Self { base, vecs }
    }

    pub fn base(&self) -> &MapField {
        &self.base
    }

    pub fn vecs(&self) -> &[DVector<f64>] {
        &self.vecs
    }

    pub fn len(&self) -> usize {
        self.vecs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vecs.is_empty()
    }

    pub fn manifold(&self) -> &Arc<Manifold> {
        self.base.manifold()
    }

    pub fn domain(&self) -> &Arc<QuadratureDomain> {
        self.base.domain()
    }

    /// `L_{π_N} h`, the base map of `h`.
    pub fn base_projection(&self) -> Result<MapField> {
        let values = lift(&self.vecs, |i, _| Ok(self.base.values()[i].clone()))?;
        MapField::new(self.domain().clone(), self.manifold().clone(), values)
    }

    /// Samplewise `c·h`.
    pub fn scale(&self, c: f64) -> TangentField {
        TangentField {
            base: self.base.clone(),
            vecs: self.vecs.iter().map(|v| v * c).collect(),
        }
    }

    /// Samplewise sum of two fields at the same base.
    pub fn add(&self, other: &TangentField) -> Result<TangentField> {
        self.base.check_same_map(&other.base)?;
        Ok(TangentField {
            base: self.base.clone(),
            vecs: self
                .vecs
                .iter()
                .zip(&other.vecs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

/// An element `ξ ∈ C^∞(M, TTN) ≅ TTC^∞(M, N)`.
#[derive(Debug, Clone)]
pub struct SecondTangentField {
    domain: Arc<QuadratureDomain>,
    manifold: Arc<Manifold>,
    quads: Vec<SecondTangentVector>,
}

impl PartialEq for SecondTangentField {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain
            && self.manifold.name() == other.manifold.name()
            && self.quads == other.quads
    }
}

impl SecondTangentField {
    pub fn new(
        domain: Arc<QuadratureDomain>,
        manifold: Arc<Manifold>,
        quads: Vec<SecondTangentVector>,
    ) -> Result<Self> {
        if quads.len() != domain.len() {
            return Err(GeomError::LengthMismatch {
                expected: domain.len(),
                got: quads.len(),
            });
        }
        let n = manifold.coord_dim();
        for (i, q) in quads.iter().enumerate() {
            q.check_dims().map_err(|e| GeomError::at_sample(i, e))?;
            if q.x.len() != n {
                return Err(GeomError::at_sample(
                    i,
                    GeomError::DimensionMismatch {
                        expected: n,
                        got: q.x.len(),
                    },
                ));
            }
        }
        Ok(Self {
            domain,
            manifold,
            quads,
        })
    }

    pub fn domain(&self) -> &Arc<QuadratureDomain> {
        &self.domain
    }

    pub fn manifold(&self) -> &Arc<Manifold> {
        &self.manifold
    }

    pub fn quads(&self) -> &[SecondTangentVector] {
        &self.quads
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }
}
