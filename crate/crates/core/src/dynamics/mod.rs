//! Geodesics of the L² metric: trajectory integration, energy, covariant
//! derivatives along paths, parallel transport, and the log map.
//!
//! An L² geodesic moves every sample along a geodesic of the target, so all
//! of this is per-sample work followed by ordered reductions.

mod shooting;

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use shooting::{geodesic_distance, log_field, log_point, LogOptions};

use crate::error::{GeomError, Result};
use crate::manifold::{Manifold, SecondTangentVector};
use crate::mapspace::{
    connector_field, l2_inner, lift, MapField, SecondTangentField, TangentField,
};
use crate::sum::compensated_sum;

/// A time-sampled path `t ↦ q(t)` in the mapping space.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPath {
    times: Vec<f64>,
    maps: Vec<MapField>,
    velocities: Option<Vec<TangentField>>,
}

impl FieldPath {
    pub fn new(
        times: Vec<f64>,
        maps: Vec<MapField>,
        velocities: Option<Vec<TangentField>>,
    ) -> Result<Self> {
        if times.len() < 2 {
            return Err(GeomError::InvalidParameter(
                "a path needs at least two snapshots".into(),
            ));
        }
        if times.len() != maps.len() {
            return Err(GeomError::LengthMismatch {
                expected: times.len(),
                got: maps.len(),
            });
        }
        if times[0] != 0.0 {
            return Err(GeomError::InvalidParameter(
                "path times must start at 0".into(),
            ));
        }
        if times
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(GeomError::InvalidParameter(
                "path times must increase strictly".into(),
            ));
        }
        for m in &maps[1..] {
            maps[0].check_same_space(m)?;
        }
        if let Some(vel) = &velocities {
            if vel.len() != maps.len() {
                return Err(GeomError::LengthMismatch {
                    expected: maps.len(),
                    got: vel.len(),
                });
            }
            for (m, v) in maps.iter().zip(vel) {
                m.check_same_map(v.base())?;
            }
        }
        Ok(Self {
            times,
            maps,
            velocities,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn maps(&self) -> &[MapField] {
        &self.maps
    }

    pub fn velocities(&self) -> Option<&[TangentField]> {
        self.velocities.as_deref()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn manifold(&self) -> &Arc<Manifold> {
        self.maps[0].manifold()
    }

    pub fn last(&self) -> &MapField {
        self.maps.last().expect("non-empty path")
    }

    /// The sampled curve traced by sample `i`.
    pub fn sample_curve(&self, i: usize) -> Vec<DVector<f64>> {
        self.maps.iter().map(|m| m.values()[i].clone()).collect()
    }
}

/// Diagnostics of an integrated geodesic, one entry per snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicReport {
    pub times: Vec<f64>,
    /// `½ G_q(q̇, q̇)` at each snapshot.
    pub energy_series: Vec<f64>,
    /// Max over samples of |finite-difference acceleration − spray acceleration|.
    pub residual_series: Vec<f64>,
    /// Max over samples of the constraint residual (0 in a chart).
    pub drift_series: Vec<f64>,
    pub max_pointwise_geodesic_residual: f64,
    pub constraint_drift: f64,
}

impl GeodesicReport {
    /// Largest relative deviation of the energy from its initial value.
    pub fn relative_energy_drift(&self) -> f64 {
        let e0 = self.energy_series[0];
        if e0 == 0.0 {
            return self.energy_series.iter().fold(0.0, |m, e| m.max(e.abs()));
        }
        self.energy_series
            .iter()
            .fold(0.0, |m, e| m.max(((e - e0) / e0).abs()))
    }

    /// `time,energy,residual,drift` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,energy,residual,drift\n");
        for j in 0..self.times.len() {
            out.push_str(&format!(
                "{:?},{:?},{:?},{:?}\n",
                self.times[j], self.energy_series[j], self.residual_series[j], self.drift_series[j]
            ));
        }
        out
    }
}

/// `q0 + t·h0` style snapshot times `j / (T − 1)`.
pub fn uniform_times(snapshots: usize) -> Vec<f64> {
    (0..snapshots)
        .map(|j| j as f64 / (snapshots - 1) as f64)
        .collect()
}

/// Integrates the L² geodesic from `(q0, h0)` over `[0, 1]`, recording
/// `snapshots` states with `steps_per_snapshot` RK4 steps between them.
/// The final snapshot equals `exp_field(h0, (snapshots − 1)·steps_per_snapshot)`.
pub fn integrate_geodesic(
    h0: &TangentField,
    snapshots: usize,
    steps_per_snapshot: usize,
) -> Result<(FieldPath, GeodesicReport)> {
    if snapshots < 2 || steps_per_snapshot == 0 {
        return Err(GeomError::InvalidParameter(
            "need at least 2 snapshots and 1 step per snapshot".into(),
        ));
    }
    let q0 = h0.base();
    let man = q0.manifold().clone();
    let total = (snapshots - 1) * steps_per_snapshot;
    let per_sample = lift(h0.vecs(), |i, h| {
        man.geodesic_snapshots(&q0.values()[i], h, total, steps_per_snapshot)
    })?;

    let times = uniform_times(snapshots);
    let mut maps = Vec::with_capacity(snapshots);
    let mut vels = Vec::with_capacity(snapshots);
    for j in 0..snapshots {
        let values: Vec<_> = per_sample.iter().map(|s| s[j].x.clone()).collect();
        let vecs: Vec<_> = per_sample.iter().map(|s| s[j].v.clone()).collect();
        let map = MapField::new(q0.domain().clone(), man.clone(), values)?;
        vels.push(TangentField::new(map.clone(), vecs)?);
        maps.push(map);
    }
    let path = FieldPath::new(times, maps, Some(vels))?;
    let report = geodesic_report(&path)?;
    Ok((path, report))
}

/// Second time derivative of a sampled curve at node `j` (uniform spacing).
fn second_difference(
    man: &Manifold,
    curve: &[DVector<f64>],
    j: usize,
    dt: f64,
) -> Option<DVector<f64>> {
    let n = curve.len();
    let d = |a: usize, b: usize| man.difference(&curve[a], &curve[b]);
    if n < 3 {
        return None;
    }
    let dt2 = dt * dt;
    if j > 0 && j + 1 < n {
        Some((d(j + 1, j) - d(j, j - 1)) / dt2)
    } else if n < 4 {
        None
    } else if j == 0 {
        // 2x0 − 5x1 + 4x2 − x3 written as differences against x0.
        Some((d(1, 0) * -5.0 + d(2, 0) * 4.0 - d(3, 0)) / dt2)
    } else {
        let l = n - 1;
        Some((d(l - 1, l) * -5.0 + d(l - 2, l) * 4.0 - d(l - 3, l)) / dt2)
    }
}

/// Energy, geodesic residual and constraint drift series of a path with
/// stored velocities and uniform times.
pub fn geodesic_report(path: &FieldPath) -> Result<GeodesicReport> {
    let vels = path.velocities().ok_or(GeomError::NoVelocities)?;
    let man = path.manifold();
    let t_count = path.len();
    let dt = path.times()[1] - path.times()[0];
    let m = path.maps()[0].len();

    let energy_series = path
        .maps()
        .iter()
        .zip(vels)
        .map(|(q, v)| l2_inner(q, v, v).map(|e| 0.5 * e))
        .collect::<Result<Vec<_>>>()?;

    let curves: Vec<Vec<DVector<f64>>> = (0..m).map(|i| path.sample_curve(i)).collect();
    let per_sample = lift(&curves, |i, curve| {
        let mut res = vec![0.0; t_count];
        for (j, r) in res.iter_mut().enumerate() {
            if let Some(acc_fd) = second_difference(man, curve, j, dt) {
                let acc = man.acceleration(&curve[j], &vels[j].vecs()[i])?;
                *r = (acc_fd - acc).amax();
            }
        }
        Ok(res)
    })?;
    let residual_series: Vec<f64> = (0..t_count)
        .map(|j| per_sample.iter().fold(0.0, |acc: f64, r| acc.max(r[j])))
        .collect();

    let drift_series: Vec<f64> = path
        .maps()
        .iter()
        .map(|q| match man.as_embedded() {
            Some(e) => q
                .values()
                .iter()
                .fold(0.0, |acc: f64, x| acc.max(e.constraint_residual(x))),
            None => 0.0,
        })
        .collect();

    Ok(GeodesicReport {
        times: path.times().to_vec(),
        max_pointwise_geodesic_residual: residual_series.iter().copied().fold(0.0, f64::max),
        constraint_drift: drift_series.iter().copied().fold(0.0, f64::max),
        energy_series,
        residual_series,
        drift_series,
    })
}

/// Trapezoid weights for (possibly non-uniform) nodes.
fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|j| {
            let left = if j > 0 { times[j] - times[j - 1] } else { 0.0 };
            let right = if j + 1 < n {
                times[j + 1] - times[j]
            } else {
                0.0
            };
            0.5 * (left + right)
        })
        .collect()
}

/// `E = ½ ∫₀¹ G_q(q̇, q̇) dt` by the trapezoid rule over the snapshots.
pub fn path_energy(path: &FieldPath) -> Result<f64> {
    let vels = path.velocities().ok_or(GeomError::NoVelocities)?;
    let weights = trapezoid_weights(path.times());
    let terms = path
        .maps()
        .iter()
        .zip(vels)
        .zip(&weights)
        .map(|((q, v), w)| l2_inner(q, v, v).map(|g| w * g))
        .collect::<Result<Vec<_>>>()?;
    Ok(0.5 * compensated_sum(terms))
}

/// Weights of the three-point Lagrange derivative at `ts[at]`.
fn derivative_weights(ts: [f64; 3], at: usize) -> [f64; 3] {
    let t = ts[at];
    let mut w = [0.0; 3];
    for i in 0..3 {
        let mut acc = 0.0;
        for m in 0..3 {
            if m == i {
                continue;
            }
            let mut prod = 1.0 / (ts[i] - ts[m]);
            for l in 0..3 {
                if l != i && l != m {
                    prod *= (t - ts[l]) / (ts[i] - ts[l]);
                }
            }
            acc += prod;
        }
        w[i] = acc;
    }
    w
}

/// Time derivative at node `j` of a series of coordinate vectors, measured
/// by differences against node `j` (so periodic chart coordinates wrap).
fn time_derivative<F>(times: &[f64], j: usize, diff: F) -> DVector<f64>
where
    F: Fn(usize, usize) -> DVector<f64>,
{
    let n = times.len();
    if n == 2 {
        return diff(1, 0) / (times[1] - times[0]);
    }
    let (lo, at) = if j == 0 {
        (0, 0)
    } else if j == n - 1 {
        (n - 3, 2)
    } else {
        (j - 1, 1)
    };
    let ts = [times[lo], times[lo + 1], times[lo + 2]];
    let w = derivative_weights(ts, at);
    let mut out = diff(lo, j) * w[0];
    out += diff(lo + 1, j) * w[1];
    out += diff(lo + 2, j) * w[2];
    out
}

/// `∇_{∂t} s` along the path: at each node the finite-difference time
/// derivative `(x, s; ẋ, ṡ)` is fed through the L² connector.
pub fn covariant_derivative_along_path(
    path: &FieldPath,
    s: &[TangentField],
) -> Result<Vec<TangentField>> {
    if s.len() != path.len() {
        return Err(GeomError::LengthMismatch {
            expected: path.len(),
            got: s.len(),
        });
    }
    for (q, f) in path.maps().iter().zip(s) {
        q.check_same_map(f.base())?;
    }
    let man = path.manifold();
    let times = path.times();
    let m = path.maps()[0].len();

    (0..path.len())
        .map(|j| {
            let quads = (0..m)
                .map(|i| {
                    let x = path.maps()[j].values()[i].clone();
                    let xdot = match path.velocities() {
                        Some(v) => v[j].vecs()[i].clone(),
                        None => time_derivative(times, j, |a, b| {
                            man.difference(&path.maps()[a].values()[i], &path.maps()[b].values()[i])
                        }),
                    };
                    let sdot = time_derivative(times, j, |a, b| &s[a].vecs()[i] - &s[b].vecs()[i]);
                    SecondTangentVector::new(x, s[j].vecs()[i].clone(), xdot, sdot)
                })
                .collect();
            let xi = SecondTangentField::new(path.maps()[j].domain().clone(), man.clone(), quads)?;
            connector_field(&xi)
        })
        .collect()
}

/// Parallel transport of `v0` along every sample curve of the path.
pub fn parallel_transport_field(path: &FieldPath, v0: &TangentField) -> Result<TangentField> {
    path.maps()[0].check_same_map(v0.base())?;
    let man = path.manifold();
    let vecs = lift(v0.vecs(), |i, v| {
        man.parallel_transport(&path.sample_curve(i), v)
    })?;
    TangentField::new(path.last().clone(), vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::registry;
    use crate::mapspace::{exp_field, QuadratureDomain};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn flat_field() -> TangentField {
        let m = Arc::new(registry::parse("flat:n=2").unwrap());
        let d = Arc::new(QuadratureDomain::new(vec![0.25, 0.75]).unwrap());
        let q = MapField::new(d, m, vec![v(&[0.0, 1.0]), v(&[2.0, -1.0])]).unwrap();
        TangentField::new(q, vec![v(&[0.6, 0.8]), v(&[-0.8, 0.6])]).unwrap()
    }

    #[test]
    fn flat_geodesic_is_affine() {
        let h = flat_field();
        let (path, report) = integrate_geodesic(&h, 5, 3).unwrap();
        for (t, q) in path.times().iter().zip(path.maps()) {
            for i in 0..2 {
                assert_eq!(q.values()[i], &h.base().values()[i] + &h.vecs()[i] * *t);
            }
        }
        assert_eq!(path.last(), &exp_field(&h, 12).unwrap());
        assert!(report.max_pointwise_geodesic_residual < 1e-12);
        // Unit speed per sample, unit total weight.
        assert!((path_energy(&path).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_velocity_gives_constant_path() {
        let h = TangentField::zeros(flat_field().base().clone());
        let (path, _) = integrate_geodesic(&h, 4, 2).unwrap();
        assert!(path.maps().iter().all(|q| q == h.base()));
        assert_eq!(path_energy(&path).unwrap(), 0.0);
        let cov = covariant_derivative_along_path(&path, path.velocities().unwrap()).unwrap();
        assert!(cov.iter().all(|f| f.vecs().iter().all(|x| x.norm() == 0.0)));
    }

    #[test]
    fn path_validation() {
        let q = flat_field().base().clone();
        assert!(FieldPath::new(vec![0.0], vec![q.clone()], None).is_err());
        assert!(FieldPath::new(vec![0.1, 0.2], vec![q.clone(), q.clone()], None).is_err());
        assert!(FieldPath::new(vec![0.0, 0.0], vec![q.clone(), q.clone()], None).is_err());
        let path = FieldPath::new(vec![0.0, 1.0], vec![q.clone(), q], None).unwrap();
        assert_eq!(path_energy(&path), Err(GeomError::NoVelocities));
    }

    #[test]
    fn flat_linear_series_has_constant_derivative() {
        let h = flat_field();
        let (path, _) = integrate_geodesic(&h, 6, 1).unwrap();
        let slope = v(&[0.5, -2.0]);
        let s: Vec<_> = path
            .maps()
            .iter()
            .zip(path.times())
            .map(|(q, t)| {
                TangentField::new(q.clone(), vec![&slope * *t, &slope * (1.0 + t)]).unwrap()
            })
            .collect();
        let cov = covariant_derivative_along_path(&path, &s).unwrap();
        for f in cov {
            for x in f.vecs() {
                assert!((x - &slope).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_weights_exact_on_quadratics() {
        let ts = [0.0, 0.3, 1.0];
        for at in 0..3 {
            let w = derivative_weights(ts, at);
            let f = |t: f64| 2.0 * t * t - t + 1.0;
            let approx: f64 = (0..3).map(|i| w[i] * f(ts[i])).sum();
            assert!((approx - (4.0 * ts[at] - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn transport_on_flat_and_constant_paths() {
        let h = flat_field();
        let (path, _) = integrate_geodesic(&h, 3, 2).unwrap();
        let v0 = TangentField::new(h.base().clone(), vec![v(&[1.0, 2.0]), v(&[3.0, 4.0])]).unwrap();
        let out = parallel_transport_field(&path, &v0).unwrap();
        assert_eq!(out.vecs(), v0.vecs());

        let m = Arc::new(registry::parse("sphere").unwrap());
        let d = Arc::new(QuadratureDomain::uniform(1).unwrap());
        let q = MapField::new(d, m, vec![v(&[0.0, 0.0, 1.0])]).unwrap();
        let still = FieldPath::new(
            vec![0.0, 0.5, 1.0],
            vec![q.clone(), q.clone(), q.clone()],
            None,
        )
        .unwrap();
        let w0 = TangentField::new(q, vec![v(&[0.3, 0.4, 0.0])]).unwrap();
        assert_eq!(
            parallel_transport_field(&still, &w0).unwrap().vecs(),
            w0.vecs()
        );
    }

    #[test]
    fn report_csv_layout() {
        let (_, report) = integrate_geodesic(&flat_field(), 3, 1).unwrap();
        let csv = report.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "time,energy,residual,drift");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.0,0.5,"));
    }
}
