//! Targets given as submanifolds of Euclidean space.
//!
//! The metric is the restriction of the Euclidean inner product. The
//! Levi-Civita connector is the flat ambient connector followed by the
//! orthogonal projection `P(p)` onto `T_pN`, and every other geometric
//! object here is derived from `P` and its derivative along tangent
//! directions.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::chart::{fd_step, LogHintFn, MatrixFn, PointMapFn};
use crate::error::{GeomError, Result};

pub type ConstraintFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type ProjectorDerivativeFn =
    Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type RetractionFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Constraint residual above which a point is rejected as off-manifold.
pub const ON_MANIFOLD_TOL: f64 = 1e-8;
/// Drift allowed within a single integrator step before retraction.
pub const STEP_DRIFT_TOL: f64 = 1e-6;

#[derive(Clone)]
pub struct EmbeddedManifold {
    pub(crate) name: String,
    pub(crate) ambient_dim: usize,
    pub(crate) intrinsic_dim: usize,
    pub(crate) constraint: ConstraintFn,
    pub(crate) projector: MatrixFn,
    pub(crate) projector_derivative: Option<ProjectorDerivativeFn>,
    pub(crate) retraction: RetractionFn,
    pub(crate) flat: bool,
    pub(crate) sampler: Option<PointMapFn>,
    pub(crate) log_hint: Option<LogHintFn>,
}

impl fmt::Debug for EmbeddedManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddedManifold")
            .field("name", &self.name)
            .field("ambient_dim", &self.ambient_dim)
            .field("intrinsic_dim", &self.intrinsic_dim)
            .finish()
    }
}

impl EmbeddedManifold {
    /// `constraint(p)` vanishes exactly on N; `projector(p)` is the
    /// orthogonal projection onto `T_pN` (and must be defined on a
    /// neighbourhood of N); `retraction(p, v)` is the closest point of N to
    /// `p + v`.
    pub fn new<C, P, R>(
        name: impl Into<String>,
        ambient_dim: usize,
        intrinsic_dim: usize,
        constraint: C,
        projector: P,
        retraction: R,
    ) -> Self
    where
        C: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        P: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        R: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            ambient_dim,
            intrinsic_dim,
            constraint: Arc::new(constraint),
            projector: Arc::new(projector),
            projector_derivative: None,
            retraction: Arc::new(retraction),
            flat: false,
            sampler: None,
            log_hint: None,
        }
    }

    /// `dP(p)[u]`, the derivative of the projector field along `u`.
    pub fn with_projector_derivative<F>(mut self, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.projector_derivative = Some(Arc::new(f));
        self
    }

    /// Maps a point of the unit cube `[0,1]^d` onto N.
    pub fn with_sampler<F>(mut self, f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        self.sampler = Some(Arc::new(f));
        self
    }

    pub fn with_log_hint<F>(mut self, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> Option<DVector<f64>> + Send + Sync + 'static,
    {
        self.log_hint = Some(Arc::new(f));
        self
    }

    pub fn flat(mut self) -> Self {
        self.flat = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn constraint_residual(&self, p: &DVector<f64>) -> f64 {
        (self.constraint)(p).amax()
    }

    pub fn check_point(&self, p: &DVector<f64>) -> Result<()> {
        if p.len() != self.ambient_dim {
            return Err(GeomError::DimensionMismatch {
                expected: self.ambient_dim,
                got: p.len(),
            });
        }
        let residual = self.constraint_residual(p);
        if residual.is_nan() || residual > ON_MANIFOLD_TOL {
            return Err(GeomError::PointOffManifold { residual });
        }
        Ok(())
    }

    pub fn check_tangent(&self, p: &DVector<f64>, v: &DVector<f64>) -> Result<()> {
        self.check_point(p)?;
        if v.len() != self.ambient_dim {
            return Err(GeomError::DimensionMismatch {
                expected: self.ambient_dim,
                got: v.len(),
            });
        }
        let defect = (self.projector(p) * v - v).amax();
        if defect.is_nan() || defect > ON_MANIFOLD_TOL * v.amax().max(1.0) {
            return Err(GeomError::NotTangent { defect });
        }
        Ok(())
    }

    pub fn projector(&self, p: &DVector<f64>) -> DMatrix<f64> {
        (self.projector)(p)
    }

    pub fn project(&self, p: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.projector(p) * v
    }

    pub fn projector_derivative(&self, p: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        match &self.projector_derivative {
            Some(f) => f(p, u),
            None => {
                let step = fd_step(p.amax());
                let pp = p + u * step;
                let pm = p - u * step;
                (self.projector(&pp) - self.projector(&pm)) / (2.0 * step)
            }
        }
    }

    pub fn retract(&self, p: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        (self.retraction)(p, v)
    }

    /// `K(p,h;k,l) = (p, P(p)·l)`.
    pub fn connector(&self, p: &DVector<f64>, l: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(p)?;
        Ok(self.project(p, l))
    }

    /// Geodesic acceleration `dP(p)[v]·v`: the normal component that keeps
    /// a curve with tangent velocity on N while its tangential acceleration
    /// vanishes.
    pub fn acceleration(&self, p: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        if self.flat {
            return DVector::zeros(self.ambient_dim);
        }
        self.projector_derivative(p, v) * v
    }

    /// Gauss equation in projector form: `R(h,k)l = P(dP[h]dP[k]l − dP[k]dP[h]l)`.
    pub fn curvature(
        &self,
        p: &DVector<f64>,
        h: &DVector<f64>,
        k: &DVector<f64>,
        l: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        self.check_point(p)?;
        if self.flat {
            return Ok(DVector::zeros(self.ambient_dim));
        }
        let dh = self.projector_derivative(p, h);
        let dk = self.projector_derivative(p, k);
        let r = &dh * (&dk * l) - &dk * (&dh * l);
        Ok(self.project(p, &r))
    }

    /// Orthonormal basis of `T_pN` as matrix columns (Gram–Schmidt on the
    /// columns of `P(p)`).
    pub fn tangent_basis(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let proj = self.projector(p);
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(self.intrinsic_dim);
        let mut cols: Vec<(f64, DVector<f64>)> = (0..self.ambient_dim)
            .map(|j| {
                let c = proj.column(j).into_owned();
                (c.norm(), c)
            })
            .collect();
        // Largest columns first for conditioning; stable sort keeps it deterministic.
        cols.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (_, col) in cols {
            if basis.len() == self.intrinsic_dim {
                break;
            }
            let mut w = col;
            for b in &basis {
                let c = b.dot(&w);
                w -= b * c;
            }
            let n = w.norm();
            if n > 1e-8 {
                basis.push(w / n);
            }
        }
        DMatrix::from_columns(&basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::registry;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn sphere_pole_projection() {
        let s = registry::sphere_embedded(1.0);
        let p = v(&[0.0, 0.0, 1.0]);
        assert_eq!(
            s.connector(&p, &v(&[0.0, 0.0, 5.0])).unwrap(),
            v(&[0.0, 0.0, 0.0])
        );
        assert_eq!(
            s.connector(&p, &v(&[1.0, 2.0, 3.0])).unwrap(),
            v(&[1.0, 2.0, 0.0])
        );
    }

    #[test]
    fn paraboloid_origin_projection() {
        let s = registry::paraboloid(1.0);
        let out = s
            .connector(&v(&[0.0, 0.0, 0.0]), &v(&[0.7, -1.3, 2.9]))
            .unwrap();
        assert_eq!(out, v(&[0.7, -1.3, 0.0]));
    }

    #[test]
    fn off_manifold_point_rejected() {
        let s = registry::sphere_embedded(1.0);
        let err = s
            .connector(&v(&[0.0, 0.0, 1.1]), &v(&[1.0, 0.0, 0.0]))
            .unwrap_err();
        assert!(matches!(err, GeomError::PointOffManifold { .. }));
    }

    #[test]
    fn projector_idempotent_symmetric_tangent() {
        let s = registry::paraboloid(1.0);
        let p = v(&[0.3, -0.4, 0.25]);
        let proj = s.projector(&p);
        assert!((&proj * &proj - &proj).amax() < 1e-14);
        assert!((proj.transpose() - &proj).amax() < 1e-15);
        // dc(p)·(P v) = 0 with c = z − x² − y².
        let w = &proj * v(&[1.0, 2.0, 3.0]);
        let grad = v(&[-2.0 * p[0], -2.0 * p[1], 1.0]);
        assert!(grad.dot(&w).abs() < 1e-14);
    }

    #[test]
    fn analytic_projector_derivative_matches_finite_difference() {
        for s in [registry::sphere_embedded(2.0), registry::paraboloid(0.5)] {
            let p = if s.name().starts_with("sphere") {
                v(&[0.0, 1.2, 1.6])
            } else {
                v(&[0.2, -0.6, 0.2])
            };
            let u = v(&[0.3, -0.1, 0.7]);
            let analytic = s.projector_derivative(&p, &u);
            let mut fd = s.clone();
            fd.projector_derivative = None;
            let approx = fd.projector_derivative(&p, &u);
            assert!((analytic - approx).amax() < 1e-8);
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal_and_tangent() {
        let s = registry::paraboloid(1.0);
        let p = v(&[0.5, 0.1, 0.26]);
        let b = s.tangent_basis(&p);
        assert_eq!(b.ncols(), 2);
        let gram = b.transpose() * &b;
        assert!((gram - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert!((s.projector(&p) * &b - &b).amax() < 1e-12);
    }
}
