//! Targets described in a single coordinate chart.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::tensor::{Christoffel, ChristoffelJacobian};
use crate::error::{GeomError, Result};

pub type MetricFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type ChristoffelFn = Arc<dyn Fn(&DVector<f64>) -> Christoffel + Send + Sync>;
pub type ChristoffelJacobianFn = Arc<dyn Fn(&DVector<f64>) -> ChristoffelJacobian + Send + Sync>;
pub type DomainFn = Arc<dyn Fn(&DVector<f64>) -> bool + Send + Sync>;
pub type PointMapFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type DifferenceFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type LogHintFn =
    Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> Option<DVector<f64>> + Send + Sync>;

/// Central-difference step for metric derivatives: cbrt(ε)·max(1, |x|).
pub(crate) fn fd_step(coord: f64) -> f64 {
    f64::EPSILON.cbrt() * coord.abs().max(1.0)
}

/// A Riemannian manifold `(N, g)` given by its metric in one chart.
///
/// Christoffel symbols and their derivatives are optional; when absent they
/// are derived from the metric by central differences.
#[derive(Clone)]
pub struct ChartManifold {
    pub(crate) name: String,
    pub(crate) dim: usize,
    pub(crate) metric: MetricFn,
    pub(crate) christoffel: Option<ChristoffelFn>,
    pub(crate) christoffel_jacobian: Option<ChristoffelJacobianFn>,
    pub(crate) domain: DomainFn,
    pub(crate) flat: bool,
    pub(crate) sample_box: Vec<(f64, f64)>,
    pub(crate) embedding: Option<PointMapFn>,
    pub(crate) embedding_differential: Option<MatrixFn>,
    pub(crate) difference: Option<DifferenceFn>,
    pub(crate) log_hint: Option<LogHintFn>,
}

impl fmt::Debug for ChartManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartManifold")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("analytic_christoffel", &self.christoffel.is_some())
            .field("flat", &self.flat)
            .finish()
    }
}

impl ChartManifold {
    /// A chart manifold valid everywhere, with derived Christoffel symbols.
    pub fn new<M>(name: impl Into<String>, dim: usize, metric: M) -> Self
    where
        M: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim,
            metric: Arc::new(metric),
            christoffel: None,
            christoffel_jacobian: None,
            domain: Arc::new(|_| true),
            flat: false,
            sample_box: vec![(-1.0, 1.0); dim],
            embedding: None,
            embedding_differential: None,
            difference: None,
            log_hint: None,
        }
    }

    pub fn with_christoffel<F>(mut self, f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> Christoffel + Send + Sync + 'static,
    {
        self.christoffel = Some(Arc::new(f));
        self
    }

    pub fn with_christoffel_jacobian<F>(mut self, f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> ChristoffelJacobian + Send + Sync + 'static,
    {
        self.christoffel_jacobian = Some(Arc::new(f));
        self
    }

    pub fn with_domain<F>(mut self, f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> bool + Send + Sync + 'static,
    {
        self.domain = Arc::new(f);
        self
    }

    /// Box from which random base points are drawn in verification sweeps.
    pub fn with_sample_box(mut self, bounds: Vec<(f64, f64)>) -> Self {
        assert_eq!(bounds.len(), self.dim, "sample box dimension");
        self.sample_box = bounds;
        self
    }

    /// Isometric embedding into Euclidean space and its differential.
    pub fn with_embedding<E, D>(mut self, embed: E, differential: D) -> Self
    where
        E: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        D: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.embedding = Some(Arc::new(embed));
        self.embedding_differential = Some(Arc::new(differential));
        self
    }

    /// Coordinate difference `a - b` used for endpoint residuals (periodic
    /// coordinates wrap here).
    pub fn with_difference<F>(mut self, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        self.difference = Some(Arc::new(f));
        self
    }

    pub fn with_log_hint<F>(mut self, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> Option<DVector<f64>> + Send + Sync + 'static,
    {
        self.log_hint = Some(Arc::new(f));
        self
    }

    /// Marks the metric as constant, so geodesics are straight lines.
    pub fn flat(mut self) -> Self {
        self.flat = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn in_domain(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim && x.iter().all(|c| c.is_finite()) && (self.domain)(x)
    }

    pub fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !self.in_domain(x) {
            return Err(GeomError::ChartBoundary {
                point: x.iter().copied().collect(),
            });
        }
        Ok(())
    }

    pub fn metric(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        Ok((self.metric)(x))
    }

    pub fn inner(&self, x: &DVector<f64>, h: &DVector<f64>, k: &DVector<f64>) -> Result<f64> {
        let g = self.metric(x)?;
        Ok(h.dot(&(g * k)))
    }

    pub fn difference(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        match &self.difference {
            Some(f) => f(a, b),
            None => a - b,
        }
    }

    /// Levi-Civita symbols Γ^i_{jk} from metric derivatives,
    /// `½ g^{il}(∂_j g_{lk} + ∂_k g_{lj} − ∂_l g_{jk})`.
    pub fn christoffel_from_metric(&self, x: &DVector<f64>) -> Result<Christoffel> {
        self.check_point(x)?;
        let n = self.dim;
        let g = (self.metric)(x);
        let g_inv = g.clone().cholesky().map(|c| c.inverse()).ok_or_else(|| {
            GeomError::DegenerateMetric {
                point: x.iter().copied().collect(),
            }
        })?;

        // dg[m] = ∂_m g
        let mut dg = Vec::with_capacity(n);
        for m in 0..n {
            let step = fd_step(x[m]);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[m] += step;
            xm[m] -= step;
            if !self.in_domain(&xp) || !self.in_domain(&xm) {
                return Err(GeomError::ChartBoundary {
                    point: x.iter().copied().collect(),
                });
            }
            // Use the realised step so the quotient is exact in the spacing.
            let span = xp[m] - xm[m];
            dg.push(((self.metric)(&xp) - (self.metric)(&xm)) / span);
        }

        let mut gamma = Christoffel::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += g_inv[(i, l)] * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]);
                    }
                    gamma.set(i, j, k, 0.5 * acc);
                    gamma.set(i, k, j, 0.5 * acc);
                }
            }
        }
        Ok(gamma)
    }

    /// Analytic symbols when supplied, otherwise [`Self::christoffel_from_metric`].
    pub fn christoffel(&self, x: &DVector<f64>) -> Result<Christoffel> {
        match &self.christoffel {
            Some(f) => {
                self.check_point(x)?;
                Ok(f(x))
            }
            None => self.christoffel_from_metric(x),
        }
    }

    /// ∂_m Γ^i_{jk}, analytic or by central differences of [`Self::christoffel`].
    pub fn christoffel_jacobian(&self, x: &DVector<f64>) -> Result<ChristoffelJacobian> {
        self.check_point(x)?;
        if let Some(f) = &self.christoffel_jacobian {
            return Ok(f(x));
        }
        let n = self.dim;
        let mut jac = ChristoffelJacobian::zeros(n);
        for m in 0..n {
            let step = fd_step(x[m]);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[m] += step;
            xm[m] -= step;
            let span = xp[m] - xm[m];
            let gp = self.christoffel(&xp)?;
            let gm = self.christoffel(&xm)?;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        jac.set(i, j, k, m, (gp.get(i, j, k) - gm.get(i, j, k)) / span);
                    }
                }
            }
        }
        Ok(jac)
    }

    /// Connector `K(x,h;k,l) = (x, l + Γ_x(k,h))`.
    pub fn connector(
        &self,
        x: &DVector<f64>,
        h: &DVector<f64>,
        k: &DVector<f64>,
        l: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let gamma = self.christoffel(x)?;
        Ok(l + gamma.contract(k, h))
    }

    /// Geodesic acceleration `−Γ_x(v,v)`.
    pub fn acceleration(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        if self.flat {
            self.check_point(x)?;
            return Ok(DVector::zeros(self.dim));
        }
        let gamma = self.christoffel(x)?;
        Ok(-gamma.contract(v, v))
    }

    /// `R(h,k)l = dΓ[h](k,l) − dΓ[k](h,l) + Γ(h,Γ(k,l)) − Γ(k,Γ(h,l))`.
    pub fn curvature(
        &self,
        x: &DVector<f64>,
        h: &DVector<f64>,
        k: &DVector<f64>,
        l: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let gamma = self.christoffel(x)?;
        let jac = self.christoffel_jacobian(x)?;
        let d_h = jac.directional(h);
        let d_k = jac.directional(k);
        let deriv = d_h.contract(k, l) - d_k.contract(h, l);
        let quad =
            gamma.contract(h, &gamma.contract(k, l)) - gamma.contract(k, &gamma.contract(h, l));
        Ok(deriv + quad)
    }

    /// Image of a chart point under the embedding, when one is attached.
    pub fn embed(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(x)?;
        let f = self
            .embedding
            .as_ref()
            .ok_or(GeomError::UnsupportedRepresentation(
                "chart without embedding",
            ))?;
        Ok(f(x))
    }

    pub fn embed_tangent(&self, x: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(x)?;
        let d =
            self.embedding_differential
                .as_ref()
                .ok_or(GeomError::UnsupportedRepresentation(
                    "chart without embedding",
                ))?;
        Ok(d(x) * h)
    }
}
