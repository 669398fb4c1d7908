//! Built-in targets and the `name:key=value:...` selection grammar.
//!
//! | name        | keys                      | representations   |
//! |-------------|---------------------------|-------------------|
//! | `flat`      | `n` (default 2), `rep`    | chart, embedded   |
//! | `sphere`    | `r` (default 1), `rep`    | chart, embedded   |
//! | `poincare`  | `rep`                     | chart             |
//! | `paraboloid`| `a` (default 1), `rep`    | embedded          |
//!
//! `rep` defaults to `chart` for `flat` and `poincare`, `embedded` for
//! `sphere` and `paraboloid`. The sphere chart is polar `(θ, φ)`; the
//! paraboloid is `z = a(x² + y²)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::chart::ChartManifold;
use super::embedded::EmbeddedManifold;
use super::tensor::{Christoffel, ChristoffelJacobian};
use super::Manifold;
use crate::error::{GeomError, Result};

/// Width of the excluded band around the polar-chart singularities.
pub const POLE_BAND: f64 = 1e-3;

pub struct RegistryEntry {
    pub name: &'static str,
    pub keys: &'static str,
    pub representations: &'static str,
    pub description: &'static str,
}

pub fn entries() -> Vec<RegistryEntry> {
    vec![
        RegistryEntry {
            name: "flat",
            keys: "n=<int>=2, rep=chart|embedded",
            representations: "chart (default), embedded",
            description: "Euclidean space R^n",
        },
        RegistryEntry {
            name: "sphere",
            keys: "r=<real>=1, rep=chart|embedded",
            representations: "embedded (default), chart",
            description: "round 2-sphere of radius r; chart is polar (theta, phi)",
        },
        RegistryEntry {
            name: "poincare",
            keys: "rep=chart",
            representations: "chart",
            description: "Poincare upper half-plane, g = |dx|^2 / y^2",
        },
        RegistryEntry {
            name: "paraboloid",
            keys: "a=<real>=1, rep=embedded",
            representations: "embedded",
            description: "surface z = a(x^2 + y^2) in R^3",
        },
    ]
}

/// Every registry manifold in every representation, with default parameters.
pub fn all_defaults() -> Vec<Manifold> {
    [
        "flat:n=2:rep=chart",
        "flat:n=3:rep=embedded",
        "sphere:r=1:rep=chart",
        "sphere:r=1:rep=embedded",
        "poincare",
        "paraboloid:a=1",
    ]
    .iter()
    .map(|s| parse(s).expect("registry default"))
    .collect()
}

fn invalid(msg: impl Into<String>) -> GeomError {
    GeomError::InvalidParameter(msg.into())
}

fn positive_real(key: &str, value: &str) -> Result<f64> {
    let x: f64 = value
        .parse()
        .map_err(|_| invalid(format!("{key}={value} is not a number")))?;
    if !(x.is_finite() && x > 0.0) {
        return Err(invalid(format!("{key}={value} must be positive")));
    }
    Ok(x)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rep {
    Chart,
    Embedded,
}

/// Parses a registry string such as `sphere:r=1.0:rep=embedded`.
pub fn parse(spec: &str) -> Result<Manifold> {
    let mut parts = spec.trim().split(':');
    let name = parts.next().unwrap_or_default();
    let mut params: Vec<(&str, &str)> = Vec::new();
    for part in parts {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| invalid(format!("expected key=value, got '{part}'")))?;
        if params.iter().any(|(seen, _)| *seen == k) {
            return Err(invalid(format!("duplicate key '{k}'")));
        }
        params.push((k, v));
    }

    let allowed: &[&str] = match name {
        "flat" => &["n", "rep"],
        "sphere" => &["r", "rep"],
        "poincare" | "hyperbolic" => &["rep"],
        "paraboloid" => &["a", "rep"],
        _ => return Err(GeomError::UnknownManifold(name.to_string())),
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
        return Err(invalid(format!("unknown key '{k}' for {name}")));
    }
    let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    let rep = match get("rep") {
        None => None,
        Some("chart") => Some(Rep::Chart),
        Some("embedded") => Some(Rep::Embedded),
        Some(other) => return Err(invalid(format!("rep={other} (expected chart or embedded)"))),
    };

    match name {
        "flat" => {
            let n = match get("n") {
                None => 2,
                Some(v) => match v.parse::<usize>() {
                    Ok(n) if n >= 1 => n,
                    _ => return Err(invalid(format!("n={v} must be a positive integer"))),
                },
            };
            Ok(match rep.unwrap_or(Rep::Chart) {
                Rep::Chart => Manifold::Chart(flat_chart(n)),
                Rep::Embedded => Manifold::Embedded(flat_embedded(n)),
            })
        }
        "sphere" => {
            let r = get("r")
                .map(|v| positive_real("r", v))
                .transpose()?
                .unwrap_or(1.0);
            Ok(match rep.unwrap_or(Rep::Embedded) {
                Rep::Chart => Manifold::Chart(sphere_chart(r)),
                Rep::Embedded => Manifold::Embedded(sphere_embedded(r)),
            })
        }
        "poincare" | "hyperbolic" => match rep.unwrap_or(Rep::Chart) {
            Rep::Chart => Ok(Manifold::Chart(poincare_half_plane())),
            Rep::Embedded => Err(invalid("poincare has no embedded representation")),
        },
        "paraboloid" => {
            let a = get("a")
                .map(|v| positive_real("a", v))
                .transpose()?
                .unwrap_or(1.0);
            match rep.unwrap_or(Rep::Embedded) {
                Rep::Embedded => Ok(Manifold::Embedded(paraboloid(a))),
                Rep::Chart => Err(invalid("paraboloid has no chart representation")),
            }
        }
        _ => unreachable!(),
    }
}

fn vec3(x: f64, y: f64, z: f64) -> DVector<f64> {
    DVector::from_vec(vec![x, y, z])
}

pub fn flat_chart(n: usize) -> ChartManifold {
    ChartManifold::new(format!("flat:n={n}:rep=chart"), n, move |_| {
        DMatrix::identity(n, n)
    })
    .with_christoffel(move |_| Christoffel::zeros(n))
    .with_christoffel_jacobian(move |_| ChristoffelJacobian::zeros(n))
    .with_embedding(|x| x.clone(), move |_| DMatrix::identity(n, n))
    .with_log_hint(|x, y| Some(y - x))
    .flat()
}

pub fn flat_embedded(n: usize) -> EmbeddedManifold {
    EmbeddedManifold::new(
        format!("flat:n={n}:rep=embedded"),
        n,
        n,
        |_| DVector::zeros(1),
        move |_| DMatrix::identity(n, n),
        |p, v| p + v,
    )
    .with_projector_derivative(move |_, _| DMatrix::zeros(n, n))
    .with_sampler(|u| u.map(|c| 2.0 * c - 1.0))
    .with_log_hint(|x, y| Some(y - x))
    .flat()
}

/// Closed-form log on the sphere of radius `r` centred at the origin.
fn sphere_log_ambient(r: f64, p: &DVector<f64>, q: &DVector<f64>) -> Option<DVector<f64>> {
    let r2 = r * r;
    let c = (p.dot(q) / r2).clamp(-1.0, 1.0);
    let w = q - p * (p.dot(q) / r2);
    let wn = w.norm();
    let angle = wn.atan2(c * r);
    if wn < 1e-300 {
        return if c > 0.0 {
            Some(DVector::zeros(p.len()))
        } else {
            None
        };
    }
    if PI - angle < 1e-6 {
        return None;
    }
    Some(w * (angle * r / wn))
}

pub fn sphere_chart(r: f64) -> ChartManifold {
    let r2 = r * r;
    let embed = move |x: &DVector<f64>| {
        let (st, ct) = x[0].sin_cos();
        let (sp, cp) = x[1].sin_cos();
        vec3(r * st * cp, r * st * sp, r * ct)
    };
    let differential = move |x: &DVector<f64>| {
        let (st, ct) = x[0].sin_cos();
        let (sp, cp) = x[1].sin_cos();
        DMatrix::from_row_slice(
            3,
            2,
            &[
                r * ct * cp,
                -r * st * sp,
                r * ct * sp,
                r * st * cp,
                -r * st,
                0.0,
            ],
        )
    };
    ChartManifold::new(format!("sphere:r={r}:rep=chart"), 2, move |x| {
        let s = x[0].sin();
        DMatrix::from_diagonal(&DVector::from_vec(vec![r2, r2 * s * s]))
    })
    .with_domain(|x| x[0] > POLE_BAND && x[0] < PI - POLE_BAND)
    .with_christoffel(|x| {
        let (s, c) = x[0].sin_cos();
        let mut g = Christoffel::zeros(2);
        g.set(0, 1, 1, -s * c);
        g.set_sym(1, 0, 1, c / s);
        g
    })
    .with_christoffel_jacobian(|x| {
        let (s, _) = x[0].sin_cos();
        let mut j = ChristoffelJacobian::zeros(2);
        j.set(0, 1, 1, 0, -(2.0 * x[0]).cos());
        j.set_sym(1, 0, 1, 0, -1.0 / (s * s));
        j
    })
    .with_sample_box(vec![(0.3, PI - 0.3), (-PI, PI)])
    .with_embedding(embed, differential)
    .with_difference(|a, b| {
        let mut d = a - b;
        d[1] = (d[1] + PI).rem_euclid(2.0 * PI) - PI;
        d
    })
    .with_log_hint(move |x, y| {
        let p = embed(x);
        let q = embed(y);
        let v = sphere_log_ambient(r, &p, &q)?;
        let d = differential(x);
        let st = x[0].sin();
        let e_theta = d.column(0);
        let e_phi = d.column(1);
        Some(DVector::from_vec(vec![
            v.dot(&e_theta) / r2,
            v.dot(&e_phi) / (r2 * st * st),
        ]))
    })
}

pub fn sphere_embedded(r: f64) -> EmbeddedManifold {
    EmbeddedManifold::new(
        format!("sphere:r={r}:rep=embedded"),
        3,
        2,
        move |p| DVector::from_element(1, p.norm() - r),
        |p| {
            let n2 = p.norm_squared();
            DMatrix::identity(3, 3) - p * p.transpose() / n2
        },
        move |p, v| {
            let q = p + v;
            let n = q.norm();
            q * (r / n)
        },
    )
    .with_projector_derivative(|p, u| {
        let n2 = p.norm_squared();
        let pu = p.dot(u);
        -(u * p.transpose() + p * u.transpose()) / n2 + p * p.transpose() * (2.0 * pu / (n2 * n2))
    })
    .with_sampler(move |u| {
        let z = 2.0 * u[0] - 1.0;
        let phi = 2.0 * PI * u[1];
        let s = (1.0 - z * z).max(0.0).sqrt();
        vec3(r * s * phi.cos(), r * s * phi.sin(), r * z)
    })
    .with_log_hint(move |p, q| sphere_log_ambient(r, p, q))
}

/// Half-plane point on the hyperboloid model `−t² + u² + w² = −1`.
fn hyperboloid_point(x: &DVector<f64>) -> DVector<f64> {
    let (a, b) = (x[0], x[1]);
    let s = a * a + b * b;
    vec3((1.0 + s) / (2.0 * b), a / b, (s - 1.0) / (2.0 * b))
}

fn hyperboloid_jacobian(x: &DVector<f64>) -> DMatrix<f64> {
    let (a, b) = (x[0], x[1]);
    let b2 = b * b;
    DMatrix::from_row_slice(
        3,
        2,
        &[
            a / b,
            0.5 - (1.0 + a * a) / (2.0 * b2),
            1.0 / b,
            -a / b2,
            a / b,
            0.5 - (a * a - 1.0) / (2.0 * b2),
        ],
    )
}

fn minkowski(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn poincare_log(x: &DVector<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let p = hyperboloid_point(x);
    let q = hyperboloid_point(y);
    let c = (-minkowski(&p, &q)).max(1.0);
    let d = c.acosh();
    let scale = if d < 1e-12 { 1.0 } else { d / d.sinh() };
    let v = (q - &p * c) * scale;
    // Pull back through the isometry: h = y² Jᵀ η v.
    let eta_v = vec3(-v[0], v[1], v[2]);
    Some(hyperboloid_jacobian(x).transpose() * eta_v * (x[1] * x[1]))
}

pub fn poincare_half_plane() -> ChartManifold {
    ChartManifold::new("poincare:rep=chart", 2, |x| {
        let s = 1.0 / (x[1] * x[1]);
        DMatrix::from_diagonal_element(2, 2, s)
    })
    .with_domain(|x| x[1] > 0.0)
    .with_christoffel(|x| {
        let inv = 1.0 / x[1];
        let mut g = Christoffel::zeros(2);
        g.set_sym(0, 0, 1, -inv);
        g.set(1, 0, 0, inv);
        g.set(1, 1, 1, -inv);
        g
    })
    .with_christoffel_jacobian(|x| {
        let inv2 = 1.0 / (x[1] * x[1]);
        let mut j = ChristoffelJacobian::zeros(2);
        j.set_sym(0, 0, 1, 1, inv2);
        j.set(1, 0, 0, 1, -inv2);
        j.set(1, 1, 1, 1, inv2);
        j
    })
    .with_sample_box(vec![(-1.0, 1.0), (0.5, 2.0)])
    .with_log_hint(poincare_log)
}

pub fn paraboloid(a: f64) -> EmbeddedManifold {
    let normal = move |p: &DVector<f64>| vec3(-2.0 * a * p[0], -2.0 * a * p[1], 1.0);
    EmbeddedManifold::new(
        format!("paraboloid:a={a}:rep=embedded"),
        3,
        2,
        move |p| DVector::from_element(1, p[2] - a * (p[0] * p[0] + p[1] * p[1])),
        move |p| {
            let n = normal(p);
            DMatrix::identity(3, 3) - &n * n.transpose() / n.norm_squared()
        },
        move |p, v| {
            let q = p + v;
            let rho = q[0].hypot(q[1]);
            // Closest point lies in the vertical half-plane through q:
            // minimise (s − ρ)² + (a s² − z)² over s.
            let mut s = rho;
            for _ in 0..50 {
                let f = (s - rho) + 2.0 * a * s * (a * s * s - q[2]);
                let df = 1.0 + 2.0 * a * (3.0 * a * s * s - q[2]);
                let step = f / df;
                s -= step;
                if step.abs() <= 1e-16 * s.abs().max(1.0) {
                    break;
                }
            }
            let (cx, cy) = if rho > 0.0 {
                (q[0] / rho, q[1] / rho)
            } else {
                (1.0, 0.0)
            };
            vec3(s * cx, s * cy, a * s * s)
        },
    )
    .with_projector_derivative(move |p, u| {
        let n = normal(p);
        let dn = vec3(-2.0 * a * u[0], -2.0 * a * u[1], 0.0);
        let s = n.norm_squared();
        let ndn = n.dot(&dn);
        -(&dn * n.transpose() + &n * dn.transpose()) / s
            + &n * n.transpose() * (2.0 * ndn / (s * s))
    })
    .with_sampler(move |u| {
        let x = 2.0 * u[0] - 1.0;
        let y = 2.0 * u[1] - 1.0;
        vec3(x, y, a * (x * x + y * y))
    })
}
