//! Pointwise geometry of the target `(N, g)`.
//!
//! A target is either a [`ChartManifold`] (metric and Christoffel symbols in
//! one chart) or an [`EmbeddedManifold`] (a submanifold of `R^d` with its
//! tangent projector). [`Manifold`] dispatches the shared operations.

mod chart;
mod embedded;
pub mod registry;
mod tensor;
mod transport;

use nalgebra::{DMatrix, DVector};

pub use chart::ChartManifold;
pub use embedded::{EmbeddedManifold, ON_MANIFOLD_TOL, STEP_DRIFT_TOL};
pub use tensor::{Christoffel, ChristoffelJacobian};

use crate::error::{GeomError, Result};
use crate::integrate::{rk4_second_order, PhaseState};

/// Default number of RK4 steps over unit time.
pub const DEFAULT_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Chart,
    Embedded,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Chart => "chart",
            Representation::Embedded => "embedded",
        }
    }
}

/// `(x, h)` with `h ∈ T_xN`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: DVector<f64>,
    pub vec: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: DVector<f64>, vec: DVector<f64>) -> Self {
        Self { base, vec }
    }
}

/// An element `(x, h; k, l)` of `TTN` in coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondTangentVector {
    pub x: DVector<f64>,
    pub h: DVector<f64>,
    pub k: DVector<f64>,
    pub l: DVector<f64>,
}

impl SecondTangentVector {
    pub fn new(x: DVector<f64>, h: DVector<f64>, k: DVector<f64>, l: DVector<f64>) -> Self {
        Self { x, h, k, l }
    }

    /// `vl(h, k) = (x, h; 0, k)`.
    pub fn vertical_lift(x: DVector<f64>, h: DVector<f64>, k: DVector<f64>) -> Self {
        let zero = DVector::zeros(x.len());
        Self::new(x, h, zero, k)
    }

    /// `vpr(x, h; 0, k) = (x, k)`; fails unless the `k` slot is exactly zero.
    pub fn vertical_projection(&self) -> Result<TangentVector> {
        if self.k.iter().any(|&c| c != 0.0) {
            return Err(GeomError::NotVertical);
        }
        Ok(TangentVector::new(self.x.clone(), self.l.clone()))
    }

    /// Canonical flip `κ(x, h; k, l) = (x, k; h, l)`.
    pub fn flip(&self) -> Self {
        Self::new(
            self.x.clone(),
            self.k.clone(),
            self.h.clone(),
            self.l.clone(),
        )
    }

    pub fn check_dims(&self) -> Result<()> {
        let n = self.x.len();
        for part in [&self.h, &self.k, &self.l] {
            if part.len() != n {
                return Err(GeomError::DimensionMismatch {
                    expected: n,
                    got: part.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Manifold {
    Chart(ChartManifold),
    Embedded(EmbeddedManifold),
}

impl From<ChartManifold> for Manifold {
    fn from(m: ChartManifold) -> Self {
        Manifold::Chart(m)
    }
}

impl From<EmbeddedManifold> for Manifold {
    fn from(m: EmbeddedManifold) -> Self {
        Manifold::Embedded(m)
    }
}

impl Manifold {
    /// Registry string (or user-supplied name for custom targets).
    pub fn name(&self) -> &str {
        match self {
            Manifold::Chart(m) => m.name(),
            Manifold::Embedded(m) => m.name(),
        }
    }

    pub fn representation(&self) -> Representation {
        match self {
            Manifold::Chart(_) => Representation::Chart,
            Manifold::Embedded(_) => Representation::Embedded,
        }
    }

    /// Length of coordinate vectors: chart dimension or ambient dimension.
    pub fn coord_dim(&self) -> usize {
        match self {
            Manifold::Chart(m) => m.dim(),
            Manifold::Embedded(m) => m.ambient_dim(),
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Manifold::Chart(m) => m.dim(),
            Manifold::Embedded(m) => m.intrinsic_dim(),
        }
    }

    pub fn is_flat(&self) -> bool {
        match self {
            Manifold::Chart(m) => m.is_flat(),
            Manifold::Embedded(m) => m.is_flat(),
        }
    }

    pub fn as_chart(&self) -> Option<&ChartManifold> {
        match self {
            Manifold::Chart(m) => Some(m),
            Manifold::Embedded(_) => None,
        }
    }

    pub fn as_embedded(&self) -> Option<&EmbeddedManifold> {
        match self {
            Manifold::Chart(_) => None,
            Manifold::Embedded(m) => Some(m),
        }
    }

    pub fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        match self {
            Manifold::Chart(m) => m.check_point(x),
            Manifold::Embedded(m) => m.check_point(x),
        }
    }

    pub fn check_tangent(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<()> {
        match self {
            Manifold::Chart(m) => {
                m.check_point(x)?;
                if v.len() != m.dim() {
                    return Err(GeomError::DimensionMismatch {
                        expected: m.dim(),
                        got: v.len(),
                    });
                }
                Ok(())
            }
            Manifold::Embedded(m) => m.check_tangent(x, v),
        }
    }

    /// `g_x(h, k)`.
    pub fn inner(&self, x: &DVector<f64>, h: &DVector<f64>, k: &DVector<f64>) -> Result<f64> {
        match self {
            Manifold::Chart(m) => m.inner(x, h, k),
            Manifold::Embedded(m) => {
                m.check_point(x)?;
                Ok(h.dot(k))
            }
        }
    }

    pub fn norm(&self, x: &DVector<f64>, h: &DVector<f64>) -> Result<f64> {
        Ok(self.inner(x, h, h)?.sqrt())
    }

    /// Coordinate residual `a − b` (wraps periodic chart coordinates).
    pub fn difference(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        match self {
            Manifold::Chart(m) => m.difference(a, b),
            Manifold::Embedded(_) => a - b,
        }
    }

    /// Connector `K : TTN → TN`.
    pub fn connector(&self, xi: &SecondTangentVector) -> Result<TangentVector> {
        xi.check_dims()?;
        let vec = match self {
            Manifold::Chart(m) => m.connector(&xi.x, &xi.h, &xi.k, &xi.l)?,
            Manifold::Embedded(m) => m.connector(&xi.x, &xi.l)?,
        };
        Ok(TangentVector::new(xi.x.clone(), vec))
    }

    /// Geodesic acceleration at `(x, v)`.
    pub fn acceleration(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            Manifold::Chart(m) => m.acceleration(x, v),
            Manifold::Embedded(m) => Ok(m.acceleration(x, v)),
        }
    }

    /// Geodesic spray `Ξ(x, h) = (x, h; h, a(x, h))`.
    pub fn spray(&self, v: &TangentVector) -> Result<SecondTangentVector> {
        self.check_point(&v.base)?;
        let acc = self.acceleration(&v.base, &v.vec)?;
        Ok(SecondTangentVector::new(
            v.base.clone(),
            v.vec.clone(),
            v.vec.clone(),
            acc,
        ))
    }

    /// Riemann curvature `R(h, k)l`.
    pub fn curvature(
        &self,
        x: &DVector<f64>,
        h: &DVector<f64>,
        k: &DVector<f64>,
        l: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        match self {
            Manifold::Chart(m) => m.curvature(x, h, k, l),
            Manifold::Embedded(m) => m.curvature(x, h, k, l),
        }
    }

    /// `g(R(h,k)k, h) / (|h|²|k|² − g(h,k)²)`.
    pub fn sectional_curvature(
        &self,
        x: &DVector<f64>,
        h: &DVector<f64>,
        k: &DVector<f64>,
    ) -> Result<f64> {
        let r = self.curvature(x, h, k, k)?;
        let num = self.inner(x, &r, h)?;
        let hh = self.inner(x, h, h)?;
        let kk = self.inner(x, k, k)?;
        let hk = self.inner(x, h, k)?;
        Ok(num / (hh * kk - hk * hk))
    }

    /// One fixed RK4 step of the geodesic flow, with retraction and velocity
    /// re-projection in the embedded representation. `time` is only used to
    /// label domain exits.
    pub fn geodesic_step(&self, state: &PhaseState, dt: f64, time: f64) -> Result<PhaseState> {
        match self {
            Manifold::Chart(m) => {
                let next = rk4_second_order(state, dt, |x, v| {
                    m.acceleration(x, v)
                        .map_err(|_| GeomError::GeodesicLeftDomain { time })
                })?;
                if !m.in_domain(&next.x) {
                    return Err(GeomError::GeodesicLeftDomain { time: time + dt });
                }
                Ok(next)
            }
            Manifold::Embedded(m) => {
                let next = rk4_second_order(state, dt, |x, v| Ok(m.acceleration(x, v)))?;
                let drift = m.constraint_residual(&next.x);
                if drift.is_nan() || drift > STEP_DRIFT_TOL {
                    return Err(GeomError::GeodesicLeftDomain { time: time + dt });
                }
                let x = m.retract(&state.x, &(&next.x - &state.x));
                let v = m.project(&x, &next.v);
                Ok(PhaseState::new(x, v))
            }
        }
    }

    /// Integrates the geodesic from `(x, h)` over `[0, 1]` with `steps`
    /// RK4 steps, recording the state every `snapshot_every` steps
    /// (including t = 0). Flat targets are solved in closed form.
    pub fn geodesic_snapshots(
        &self,
        x: &DVector<f64>,
        h: &DVector<f64>,
        steps: usize,
        snapshot_every: usize,
    ) -> Result<Vec<PhaseState>> {
        if steps == 0 || snapshot_every == 0 || !steps.is_multiple_of(snapshot_every) {
            return Err(GeomError::InvalidParameter(format!(
                "steps ({steps}) must be a positive multiple of snapshot spacing ({snapshot_every})"
            )));
        }
        self.check_tangent(x, h)?;
        let count = steps / snapshot_every;
        let mut out = Vec::with_capacity(count + 1);
        out.push(PhaseState::new(x.clone(), h.clone()));

        if self.is_flat() {
            for j in 1..=count {
                let t = (j * snapshot_every) as f64 / steps as f64;
                out.push(PhaseState::new(x + h * t, h.clone()));
            }
            return Ok(out);
        }

        let dt = 1.0 / steps as f64;
        let mut state = PhaseState::new(x.clone(), h.clone());
        for step in 0..steps {
            state = self.geodesic_step(&state, dt, step as f64 * dt)?;
            if (step + 1) % snapshot_every == 0 {
                out.push(state.clone());
            }
        }
        Ok(out)
    }

    /// `exp_x(h)` by fixed-step RK4 over unit time.
    pub fn exp(&self, v: &TangentVector, steps: usize) -> Result<DVector<f64>> {
        let mut snaps = self.geodesic_snapshots(&v.base, &v.vec, steps, steps)?;
        Ok(snaps.pop().expect("at least one snapshot").x)
    }

    /// Initial guess for `log_x(y)` when the target supplies a closed form.
    pub fn log_hint(&self, x: &DVector<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Manifold::Chart(m) => m.log_hint.as_ref().and_then(|f| f(x, y)),
            Manifold::Embedded(m) => m.log_hint.as_ref().and_then(|f| f(x, y)),
        }
    }

    /// Columns span `T_xN` in coordinates (orthonormal in the embedded case).
    pub fn tangent_basis(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            Manifold::Chart(m) => DMatrix::identity(m.dim(), m.dim()),
            Manifold::Embedded(m) => m.tangent_basis(x),
        }
    }

    /// Maps a point of the unit cube `[0,1]^coord_dim` into a safe region.
    pub fn sample_point(&self, unit: &DVector<f64>) -> DVector<f64> {
        match self {
            Manifold::Chart(m) => DVector::from_fn(m.dim(), |i, _| {
                let (lo, hi) = m.sample_box[i];
                lo + (hi - lo) * unit[i]
            }),
            Manifold::Embedded(m) => match &m.sampler {
                Some(f) => f(unit),
                None => {
                    let raw = unit.map(|c| 2.0 * c - 1.0);
                    m.retract(&raw, &DVector::zeros(raw.len()))
                }
            },
        }
    }

    /// Tangent vector at `x` from components in `[-1, 1]`.
    pub fn sample_tangent(&self, x: &DVector<f64>, components: &DVector<f64>) -> DVector<f64> {
        match self {
            Manifold::Chart(_) => components.clone(),
            Manifold::Embedded(m) => m.project(x, components),
        }
    }

    /// Parallel transport of `v0` along a sampled curve.
    pub fn parallel_transport(
        &self,
        curve: &[DVector<f64>],
        v0: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        transport::parallel_transport(self, curve, v0)
    }
}
