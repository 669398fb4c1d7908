//! Independent numerical oracles for the paper's statements.
//!
//! None of these reuse the primary Christoffel or curvature code paths:
//! Christoffel symbols come from a 5-point metric stencil, curvature from
//! nested differences of a connector assembled from those symbols, and the
//! Levi-Civita identification from differences of the L² inner product
//! itself. Sweeps draw their instances from a seeded ChaCha8 generator
//! sequentially, evaluate them in parallel, and reduce in instance order.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{covariant_derivative_along_path, FieldPath};
use crate::error::{GeomError, Result};
use crate::manifold::Christoffel;
use crate::manifold::{ChartManifold, Manifold, SecondTangentVector};
use crate::mapspace::{l2_inner, lift, MapField, TangentField};
use crate::sum::compensated_sum;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub check_name: String,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub instance_count: usize,
}

impl OracleReport {
    /// `passed` is derived: `max_abs_error ≤ tolerance` (NaN fails).
    pub fn new(
        check_name: impl Into<String>,
        max_abs_error: f64,
        tolerance: f64,
        instance_count: usize,
    ) -> Self {
        Self {
            check_name: check_name.into(),
            max_abs_error,
            tolerance,
            passed: max_abs_error <= tolerance,
            instance_count,
        }
    }

    /// Builds a report from per-instance errors; a failed evaluation counts
    /// as an infinite error.
    fn from_errors(name: &str, errors: Vec<Result<f64>>, tolerance: f64) -> Self {
        let count = errors.len();
        let max = errors.into_iter().fold(0.0_f64, |acc, e| match e {
            Ok(v) if v.is_nan() => f64::NAN,
            Ok(v) => {
                if acc.is_nan() {
                    acc
                } else {
                    acc.max(v)
                }
            }
            Err(_) => {
                if acc.is_nan() {
                    acc
                } else {
                    f64::INFINITY
                }
            }
        });
        Self::new(name, max, tolerance, count)
    }
}

/// Step of the 5-point Christoffel stencil.
pub const CHRISTOFFEL_STEP: f64 = 1e-4;
/// Outer step of the curvature commutator.
pub const COMMUTATOR_STEP: f64 = 1e-3;
/// Field perturbation step in the first-variation oracle.
pub const VARIATION_STEP: f64 = 1e-5;

pub const CHRISTOFFEL_TOL: f64 = 1e-5;
pub const COMMUTATOR_TOL: f64 = 1e-3;
pub const FIRST_VARIATION_TOL: f64 = 1e-4;
pub const AXIOM_TOL: f64 = 1e-10;
pub const COMPATIBILITY_TOL: f64 = 1e-4;

fn require_chart(man: &Manifold) -> Result<&ChartManifold> {
    man.as_chart().ok_or(GeomError::UnsupportedRepresentation(
        "oracle requires a chart representation",
    ))
}

/// Γ^i_{jk} from the metric by a 5-point stencil with step 1e-4.
pub fn oracle_christoffel(man: &ChartManifold, x: &DVector<f64>) -> Result<Christoffel> {
    man.check_point(x)?;
    let n = man.dim();
    let g = man.metric(x)?;
    let g_inv = g
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| GeomError::DegenerateMetric {
            point: x.iter().copied().collect(),
        })?;
    let at = |m: usize, s: f64| -> Result<DMatrix<f64>> {
        let mut y = x.clone();
        y[m] += s * CHRISTOFFEL_STEP;
        man.metric(&y).map_err(|_| GeomError::ChartBoundary {
            point: x.iter().copied().collect(),
        })
    };
    let mut dg = Vec::with_capacity(n);
    for m in 0..n {
        let d = (at(m, -2.0)? - at(m, -1.0)? * 8.0 + at(m, 1.0)? * 8.0 - at(m, 2.0)?)
            / (12.0 * CHRISTOFFEL_STEP);
        dg.push(d);
    }
    let mut gamma = Christoffel::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let acc: f64 = (0..n)
                    .map(|l| g_inv[(i, l)] * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]))
                    .sum();
                gamma.set(i, j, k, 0.5 * acc);
            }
        }
    }
    Ok(gamma)
}

/// `∇_K L` for coordinate-constant `K`, `L` at `y`: `Γ_y(k, l)` through
/// the oracle symbols.
fn oracle_nabla_const(
    man: &ChartManifold,
    y: &DVector<f64>,
    k: &DVector<f64>,
    l: &DVector<f64>,
) -> Result<DVector<f64>> {
    Ok(oracle_christoffel(man, y)?.contract(k, l))
}

/// `∇_H ∇_K L − ∇_K ∇_H L` at `x` for coordinate-constant extensions
/// (`[H, K] = 0`), by central differences of the inner covariant derivative.
pub fn oracle_curvature_commutator(
    man: &Manifold,
    x: &DVector<f64>,
    h: &DVector<f64>,
    k: &DVector<f64>,
    l: &DVector<f64>,
) -> Result<DVector<f64>> {
    let chart = require_chart(man)?;
    chart.check_point(x)?;
    // ∇_A (∇_B L) = K(x, ∇_B L; a, D(∇_B L)[a]) with K(x,s;a,t) = t + Γ(a, s).
    let nested = |a: &DVector<f64>, b: &DVector<f64>| -> Result<DVector<f64>> {
        let s = oracle_nabla_const(chart, x, b, l)?;
        let plus = oracle_nabla_const(chart, &(x + a * COMMUTATOR_STEP), b, l)?;
        let minus = oracle_nabla_const(chart, &(x - a * COMMUTATOR_STEP), b, l)?;
        let ds = (plus - minus) / (2.0 * COMMUTATOR_STEP);
        Ok(ds + oracle_christoffel(chart, x)?.contract(a, &s))
    };
    Ok(nested(h, k)? - nested(k, h)?)
}

/// `(lhs, rhs)` of the first-variation identity
/// `½(D_m G(h,k) − D_h G(k,m) − D_k G(m,h)) = Σ w g(Γ(h,k), m)`, where the
/// left side differences the L² inner product under `q ± ε·dir` and the
/// right side uses the primary pointwise Christoffel symbols in the paper's
/// sign convention (`Γ = −Γ_std`, so `K(x,h;k,l) = l − Γ(k,h)`).
pub fn oracle_first_variation(
    q: &MapField,
    h: &TangentField,
    k: &TangentField,
    m: &TangentField,
) -> Result<(f64, f64)> {
    let chart = require_chart(q.manifold())?;
    for f in [h, k, m] {
        q.check_same_map(f.base())?;
    }
    let tangent_at =
        |base: &MapField, f: &TangentField| TangentField::new(base.clone(), f.vecs().to_vec());
    let shifted = |dir: &TangentField, s: f64| -> Result<MapField> {
        let values = q
            .values()
            .iter()
            .zip(dir.vecs())
            .map(|(x, v)| x + v * s)
            .collect();
        MapField::new(q.domain().clone(), q.manifold().clone(), values)
    };
    let derivative = |dir: &TangentField, a: &TangentField, b: &TangentField| -> Result<f64> {
        let qp = shifted(dir, VARIATION_STEP)?;
        let qm = shifted(dir, -VARIATION_STEP)?;
        let gp = l2_inner(&qp, &tangent_at(&qp, a)?, &tangent_at(&qp, b)?)?;
        let gm = l2_inner(&qm, &tangent_at(&qm, a)?, &tangent_at(&qm, b)?)?;
        Ok((gp - gm) / (2.0 * VARIATION_STEP))
    };
    let lhs = 0.5 * (derivative(m, h, k)? - derivative(h, k, m)? - derivative(k, m, h)?);

    let terms = lift(q.values(), |i, x| {
        let gamma_paper = -chart.christoffel(x)?.contract(&h.vecs()[i], &k.vecs()[i]);
        chart.inner(x, &gamma_paper, &m.vecs()[i])
    })?;
    let rhs = compensated_sum(q.domain().weights().iter().zip(terms).map(|(w, t)| w * t));
    Ok((lhs, rhs))
}

/// One random connector-axiom instance.
struct AxiomInstance {
    x: DVector<f64>,
    h: [DVector<f64>; 2],
    k: [DVector<f64>; 2],
    l: [DVector<f64>; 2],
    a: f64,
    b: f64,
}

fn uniform_vec<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(lo..hi))
}

/// Random point in the manifold's safe sampling region.
pub fn random_point<R: Rng>(man: &Manifold, rng: &mut R) -> DVector<f64> {
    let unit = uniform_vec(rng, man.coord_dim(), 0.0, 1.0);
    man.sample_point(&unit)
}

/// Random tangent vector at `x` with components drawn from `[−1, 1]`.
pub fn random_tangent<R: Rng>(man: &Manifold, x: &DVector<f64>, rng: &mut R) -> DVector<f64> {
    let c = uniform_vec(rng, man.coord_dim(), -1.0, 1.0);
    man.sample_tangent(x, &c)
}

fn axiom_instance<R: Rng>(man: &Manifold, rng: &mut R) -> AxiomInstance {
    let n = man.coord_dim();
    let x = random_point(man, rng);
    let mut tan = || random_tangent(man, &x, rng);
    let h = [tan(), tan()];
    let k = [tan(), tan()];
    let l = [
        uniform_vec(rng, n, -1.0, 1.0),
        uniform_vec(rng, n, -1.0, 1.0),
    ];
    let a = rng.random_range(-1.0..1.0);
    let b = rng.random_range(-1.0..1.0);
    AxiomInstance { x, h, k, l, a, b }
}

/// Evaluates the four connector axioms on `instances` seeded random inputs:
/// `K∘vl = pr₂`, linearity in `(k,l)`, linearity in `(h,l)`, `K∘κ = K`.
pub fn run_axiom_sweep(man: &Manifold, instances: usize, seed: u64) -> Result<Vec<OracleReport>> {
    if instances == 0 {
        return Err(GeomError::InvalidParameter(
            "instances must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<AxiomInstance> = (0..instances)
        .map(|_| axiom_instance(man, &mut rng))
        .collect();
    let k_of = |x: &DVector<f64>, h: &DVector<f64>, k: &DVector<f64>, l: &DVector<f64>| {
        man.connector(&SecondTangentVector::new(
            x.clone(),
            h.clone(),
            k.clone(),
            l.clone(),
        ))
        .map(|t| t.vec)
    };
    // Each instance yields its four errors; failures are kept as errors.
    let per_instance: Vec<[Result<f64>; 4]> = {
        use rayon::prelude::*;
        inputs
            .par_iter()
            .map(|s| {
                let (x, a, b) = (&s.x, s.a, s.b);
                let vl = k_of(x, &s.h[0], &DVector::zeros(x.len()), &s.k[0])
                    .map(|r| (r - &s.k[0]).amax());
                let lin_first = (|| {
                    let lhs = k_of(
                        x,
                        &s.h[0],
                        &(&s.k[0] * a + &s.k[1] * b),
                        &(&s.l[0] * a + &s.l[1] * b),
                    )?;
                    let rhs = k_of(x, &s.h[0], &s.k[0], &s.l[0])? * a
                        + k_of(x, &s.h[0], &s.k[1], &s.l[1])? * b;
                    Ok((lhs - rhs).amax())
                })();
                let lin_second = (|| {
                    let lhs = k_of(
                        x,
                        &(&s.h[0] * a + &s.h[1] * b),
                        &s.k[0],
                        &(&s.l[0] * a + &s.l[1] * b),
                    )?;
                    let rhs = k_of(x, &s.h[0], &s.k[0], &s.l[0])? * a
                        + k_of(x, &s.h[1], &s.k[0], &s.l[1])? * b;
                    Ok((lhs - rhs).amax())
                })();
                let sym = (|| {
                    let xi = SecondTangentVector::new(
                        x.clone(),
                        s.h[0].clone(),
                        s.k[0].clone(),
                        s.l[0].clone(),
                    );
                    let lhs = man.connector(&xi.flip())?.vec;
                    let rhs = man.connector(&xi)?.vec;
                    Ok((lhs - rhs).amax())
                })();
                [vl, lin_first, lin_second, sym]
            })
            .collect()
    };
    let names = [
        "connector_vertical_lift",
        "connector_linear_first",
        "connector_linear_second",
        "connector_symmetry",
    ];
    let mut columns: [Vec<Result<f64>>; 4] = Default::default();
    for row in per_instance {
        for (c, e) in columns.iter_mut().zip(row) {
            c.push(e);
        }
    }
    Ok(names
        .iter()
        .zip(columns)
        .map(|(name, errs)| OracleReport::from_errors(name, errs, AXIOM_TOL))
        .collect())
}

/// Max deviation between the primary Christoffel symbols and the oracle
/// over seeded random chart points.
pub fn christoffel_sweep(man: &Manifold, instances: usize, seed: u64) -> Result<OracleReport> {
    let chart = require_chart(man)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<_> = (0..instances)
        .map(|_| random_point(man, &mut rng))
        .collect();
    let errors = points
        .iter()
        .map(|x| {
            let a = chart.christoffel(x)?;
            let b = oracle_christoffel(chart, x)?;
            Ok(a.as_slice()
                .iter()
                .zip(b.as_slice())
                .fold(0.0_f64, |m, (p, q)| m.max((p - q).abs())))
        })
        .collect();
    Ok(OracleReport::from_errors(
        "christoffel_oracle",
        errors,
        CHRISTOFFEL_TOL,
    ))
}

/// `curvature` vs `oracle_curvature_commutator` on seeded random inputs.
pub fn curvature_sweep(man: &Manifold, instances: usize, seed: u64) -> Result<OracleReport> {
    require_chart(man)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<_> = (0..instances)
        .map(|_| {
            let x = random_point(man, &mut rng);
            let h = random_tangent(man, &x, &mut rng);
            let k = random_tangent(man, &x, &mut rng);
            let l = random_tangent(man, &x, &mut rng);
            (x, h, k, l)
        })
        .collect();
    let errors = {
        use rayon::prelude::*;
        inputs
            .par_iter()
            .map(|(x, h, k, l)| {
                let a = man.curvature(x, h, k, l)?;
                let b = oracle_curvature_commutator(man, x, h, k, l)?;
                Ok((a - b).amax())
            })
            .collect()
    };
    Ok(OracleReport::from_errors(
        "curvature_commutator",
        errors,
        COMMUTATOR_TOL,
    ))
}

/// Random map, three tangent fields, on `samples` uniform samples.
pub fn random_fields<R: Rng>(
    man: &std::sync::Arc<Manifold>,
    domain: &std::sync::Arc<crate::mapspace::QuadratureDomain>,
    count: usize,
    rng: &mut R,
) -> Result<(MapField, Vec<TangentField>)> {
    let values: Vec<_> = (0..domain.len()).map(|_| random_point(man, rng)).collect();
    let q = MapField::new(domain.clone(), man.clone(), values)?;
    let fields = (0..count)
        .map(|_| {
            let vecs = q
                .values()
                .iter()
                .map(|x| random_tangent(man, x, rng))
                .collect();
            TangentField::new(q.clone(), vecs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((q, fields))
}

/// `|lhs − rhs|` of the first-variation identity on seeded random fields.
pub fn first_variation_sweep(
    man: &Manifold,
    instances: usize,
    samples: usize,
    seed: u64,
) -> Result<OracleReport> {
    require_chart(man)?;
    let man = std::sync::Arc::new(man.clone());
    let domain = std::sync::Arc::new(crate::mapspace::QuadratureDomain::uniform(samples)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errors = (0..instances)
        .map(|_| {
            let (q, f) = random_fields(&man, &domain, 3, &mut rng)?;
            let (lhs, rhs) = oracle_first_variation(&q, &f[0], &f[1], &f[2])?;
            Ok((lhs - rhs).abs())
        })
        .collect();
    Ok(OracleReport::from_errors(
        "first_variation",
        errors,
        FIRST_VARIATION_TOL,
    ))
}

/// Metric compatibility along a path with uniform or non-uniform times:
/// `d/dt G(Y,Z) = G(∇_t Y, Z) + G(Y, ∇_t Z)` at interior nodes, the left
/// side by central differences.
pub fn oracle_metric_compatibility(
    path: &FieldPath,
    y: &[TangentField],
    z: &[TangentField],
) -> Result<OracleReport> {
    let dy = covariant_derivative_along_path(path, y)?;
    let dz = covariant_derivative_along_path(path, z)?;
    let maps = path.maps();
    let t = path.times();
    let g = |j: usize| l2_inner(&maps[j], &y[j], &z[j]);
    let mut errors = Vec::new();
    for j in 1..path.len().saturating_sub(1) {
        let lhs = (g(j + 1)? - g(j - 1)?) / (t[j + 1] - t[j - 1]);
        let rhs = l2_inner(&maps[j], &dy[j], &z[j])? + l2_inner(&maps[j], &y[j], &dz[j])?;
        errors.push(Ok((lhs - rhs).abs()));
    }
    Ok(OracleReport::from_errors(
        "metric_compatibility",
        errors,
        COMPATIBILITY_TOL,
    ))
}

/// Every check applicable to `man`: the connector axioms always, plus the
/// Christoffel, curvature and first-variation oracles in a chart.
pub fn run_all(man: &Manifold, instances: usize, seed: u64) -> Result<Vec<OracleReport>> {
    let mut reports = run_axiom_sweep(man, instances, seed)?;
    if man.as_chart().is_some() {
        reports.push(christoffel_sweep(man, instances, seed)?);
        reports.push(curvature_sweep(man, instances, seed)?);
        reports.push(first_variation_sweep(man, instances.min(50), 8, seed)?);
    }
    Ok(reports)
}
