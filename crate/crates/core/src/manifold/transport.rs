//! Parallel transport along sampled curves.
//!
//! Each segment is integrated with the implicit midpoint rule applied to
//! `V̇ = A(t)V`, where `A` is evaluated at the segment midpoint using only the
//! chord `c_{j+1} − c_j`. Curves with corners (piecewise geodesic loops) are
//! handled without differentiating across the corner.

use nalgebra::{DMatrix, DVector};

use super::Manifold;
use crate::error::{GeomError, Result};

fn cayley_step(a: &DMatrix<f64>, v: &DVector<f64>, node: usize) -> Result<DVector<f64>> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let lhs = &id - a * 0.5;
    let rhs = (&id + a * 0.5) * v;
    lhs.lu()
        .solve(&rhs)
        .ok_or(GeomError::CurveLeftDomain { node })
}

pub(super) fn parallel_transport(
    man: &Manifold,
    curve: &[DVector<f64>],
    v0: &DVector<f64>,
) -> Result<DVector<f64>> {
    let Some(first) = curve.first() else {
        return Err(GeomError::InvalidParameter("empty curve".into()));
    };
    for (node, c) in curve.iter().enumerate() {
        man.check_point(c)
            .map_err(|_| GeomError::CurveLeftDomain { node })?;
    }
    man.check_tangent(first, v0)?;

    let mut v = v0.clone();
    for (j, pair) in curve.windows(2).enumerate() {
        let (c0, c1) = (&pair[0], &pair[1]);
        let chord = man.difference(c1, c0);
        if chord.iter().all(|&c| c == 0.0) {
            continue;
        }
        match man {
            Manifold::Chart(m) => {
                let mid = c0 + &chord * 0.5;
                let gamma = m
                    .christoffel(&mid)
                    .map_err(|_| GeomError::CurveLeftDomain { node: j })?;
                let n = m.dim();
                let mut a = DMatrix::zeros(n, n);
                for col in 0..n {
                    let e = DVector::from_fn(n, |i, _| if i == col { 1.0 } else { 0.0 });
                    a.set_column(col, &(-gamma.contract(&chord, &e)));
                }
                v = cayley_step(&a, &v, j)?;
            }
            Manifold::Embedded(m) => {
                let mid = m.retract(c0, &(&chord * 0.5));
                let a = m.projector_derivative(&mid, &chord);
                v = cayley_step(&a, &v, j)?;
                v = m.project(c1, &v);
            }
        }
    }
    Ok(v)
}
