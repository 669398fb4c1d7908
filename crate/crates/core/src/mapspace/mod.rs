//! Fields on a quadrature domain and the pointwise lift of the target's
//! geometry: `K = L_{K^g}`, `Ξ = L_{Ξ^g}`, `exp = L_{exp^g}`, `R = L_{R^g}`.
//!
//! Per-sample work runs on the rayon pool; anything that reduces over
//! samples (the L² inner product) does so sequentially in index order.

mod domain;
mod field;

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

pub use domain::QuadratureDomain;
pub use field::{MapField, SecondTangentField, TangentField};

use crate::error::{GeomError, Result};
use crate::manifold::{Manifold, SecondTangentVector, TangentVector};
use crate::sum::CompensatedSum;

/// Applies `f` to every sample in parallel. On failure the error of the
/// lowest failing index is returned, tagged with that index.
pub fn lift<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> Result<U> + Sync + Send,
{
    let results: Vec<Result<U>> = items
        .par_iter()
        .enumerate()
        .map(|(i, item)| f(i, item).map_err(|e| GeomError::at_sample(i, e)))
        .collect();
    results.into_iter().collect()
}

/// `G_q(h, k) = Σ_i w_i g_{q_i}(h_i, k_i)`, reduced in index order with
/// compensated summation.
pub fn l2_inner(q: &MapField, h: &TangentField, k: &TangentField) -> Result<f64> {
    q.check_same_map(h.base())?;
    q.check_same_map(k.base())?;
    let man = q.manifold();
    let pointwise = lift(q.values(), |i, x| man.inner(x, &h.vecs()[i], &k.vecs()[i]))?;
    let mut acc = CompensatedSum::new();
    for (w, g) in q.domain().weights().iter().zip(pointwise) {
        acc.add(w * g);
    }
    Ok(acc.value())
}

/// `L_f` on a tangent field: `f` receives `(x_i, h_i)` and returns a new
/// vector at the same base point.
pub fn left_compose_tangent<F>(h: &TangentField, f: F) -> Result<TangentField>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> Result<DVector<f64>> + Sync + Send,
{
    let vecs = lift(h.vecs(), |i, v| f(&h.base().values()[i], v))?;
    TangentField::new(h.base().clone(), vecs)
}

fn tangent_from_vectors(
    domain: &Arc<QuadratureDomain>,
    manifold: &Arc<Manifold>,
    out: Vec<TangentVector>,
) -> Result<TangentField> {
    let (bases, vecs): (Vec<_>, Vec<_>) = out.into_iter().map(|t| (t.base, t.vec)).unzip();
    let base = MapField::new(domain.clone(), manifold.clone(), bases)?;
    TangentField::new(base, vecs)
}

/// `K(ξ) = K^g ∘ ξ`.
pub fn connector_field(xi: &SecondTangentField) -> Result<TangentField> {
    let man = xi.manifold();
    let out = lift(xi.quads(), |_, q| man.connector(q))?;
    tangent_from_vectors(xi.domain(), man, out)
}

/// `Ξ(h) = Ξ^g ∘ h`.
pub fn spray_field(h: &TangentField) -> Result<SecondTangentField> {
    let man = h.manifold();
    let quads = lift(h.vecs(), |i, v| {
        man.spray(&TangentVector::new(h.base().values()[i].clone(), v.clone()))
    })?;
    SecondTangentField::new(h.domain().clone(), man.clone(), quads)
}

/// `(exp_q h)(x) = exp^g_{q(x)} h(x)`.
pub fn exp_field(h: &TangentField, steps: usize) -> Result<MapField> {
    let man = h.manifold();
    let values = lift(h.vecs(), |i, v| {
        man.exp(
            &TangentVector::new(h.base().values()[i].clone(), v.clone()),
            steps,
        )
    })?;
    MapField::new(h.domain().clone(), man.clone(), values)
}

/// `R(h, k)l = R^g ∘ (h, k, l)`.
pub fn curvature_field(
    q: &MapField,
    h: &TangentField,
    k: &TangentField,
    l: &TangentField,
) -> Result<TangentField> {
    for f in [h, k, l] {
        q.check_same_map(f.base())?;
    }
    let man = q.manifold();
    let vecs = lift(q.values(), |i, x| {
        man.curvature(x, &h.vecs()[i], &k.vecs()[i], &l.vecs()[i])
    })?;
    TangentField::new(q.clone(), vecs)
}

/// `vl(h, k) = vl_N ∘ (h, k)`.
pub fn vertical_lift_field(h: &TangentField, k: &TangentField) -> Result<SecondTangentField> {
    h.base().check_same_map(k.base())?;
    let quads = lift(h.vecs(), |i, hv| {
        Ok(SecondTangentVector::vertical_lift(
            h.base().values()[i].clone(),
            hv.clone(),
            k.vecs()[i].clone(),
        ))
    })?;
    SecondTangentField::new(h.domain().clone(), h.manifold().clone(), quads)
}

/// `vpr(ξ) = vpr_N ∘ ξ`; every sample must be vertical.
pub fn vertical_projection_field(xi: &SecondTangentField) -> Result<TangentField> {
    let out = lift(xi.quads(), |_, q| q.vertical_projection())?;
    tangent_from_vectors(xi.domain(), xi.manifold(), out)
}

/// `κ(ξ) = κ_N ∘ ξ`.
pub fn canonical_flip_field(xi: &SecondTangentField) -> Result<SecondTangentField> {
    let quads = lift(xi.quads(), |_, q| Ok(q.flip()))?;
    SecondTangentField::new(xi.domain().clone(), xi.manifold().clone(), quads)
}

/// Pushes a chart-representation map through the chart's embedding into
/// the embedded representation `target`.
pub fn chart_to_embedded(q: &MapField, target: Arc<Manifold>) -> Result<MapField> {
    let chart = q
        .manifold()
        .as_chart()
        .ok_or(GeomError::UnsupportedRepresentation(
            "embedded (expected chart)",
        ))?;
    let values = lift(q.values(), |_, x| chart.embed(x))?;
    MapField::new(q.domain().clone(), target, values)
}

/// Tangent version of [`chart_to_embedded`], via the embedding differential.
pub fn chart_to_embedded_tangent(h: &TangentField, target: Arc<Manifold>) -> Result<TangentField> {
    let chart = h
        .manifold()
        .as_chart()
        .ok_or(GeomError::UnsupportedRepresentation(
            "embedded (expected chart)",
        ))?;
    let base = chart_to_embedded(h.base(), target)?;
    let vecs = lift(h.vecs(), |i, v| {
        chart.embed_tangent(&h.base().values()[i], v)
    })?;
    TangentField::new(base, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::registry;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn flat1() -> Arc<Manifold> {
        Arc::new(registry::parse("flat:n=1").unwrap())
    }

    #[test]
    fn l2_inner_quadrature_arithmetic() {
        let d = Arc::new(QuadratureDomain::new(vec![0.5, 0.5]).unwrap());
        let q = MapField::new(d, flat1(), vec![v(&[0.0]), v(&[3.0])]).unwrap();
        let h = TangentField::new(q.clone(), vec![v(&[1.0]), v(&[2.0])]).unwrap();
        assert_eq!(l2_inner(&q, &h, &h).unwrap(), 2.5);
        let z = TangentField::zeros(q.clone());
        assert_eq!(l2_inner(&q, &h, &z).unwrap(), 0.0);
    }

    #[test]
    fn l2_inner_unit_vectors_on_sphere() {
        let m = Arc::new(registry::parse("sphere:r=1:rep=embedded").unwrap());
        let d = Arc::new(QuadratureDomain::uniform(5).unwrap());
        let q = MapField::constant(d, m, v(&[0.0, 0.0, 1.0])).unwrap();
        let h = TangentField::new(q.clone(), vec![v(&[1.0, 0.0, 0.0]); 5]).unwrap();
        assert!((l2_inner(&q, &h, &h).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_bases_rejected() {
        let d = Arc::new(QuadratureDomain::uniform(2).unwrap());
        let q = MapField::new(d.clone(), flat1(), vec![v(&[0.0]), v(&[1.0])]).unwrap();
        let p = MapField::new(d, flat1(), vec![v(&[0.0]), v(&[2.0])]).unwrap();
        let h = TangentField::zeros(p);
        assert!(matches!(
            l2_inner(&q, &h, &h),
            Err(GeomError::FieldMismatch(_))
        ));
    }

    #[test]
    fn left_composition_cases() {
        let m = Arc::new(registry::parse("sphere").unwrap());
        let d = Arc::new(QuadratureDomain::uniform(3).unwrap());
        let q = MapField::constant(d, m, v(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(q.left_compose(|x| Ok(x.clone())).unwrap(), q);
        let south = q.left_compose(|x| Ok(-x)).unwrap();
        assert!(south.values().iter().all(|x| *x == v(&[0.0, 0.0, -1.0])));
        let h = TangentField::new(q.clone(), vec![v(&[1.0, 0.0, 0.0]); 3]).unwrap();
        assert_eq!(h.base_projection().unwrap(), q);
    }

    #[test]
    fn left_composition_reports_failing_sample() {
        let d = Arc::new(QuadratureDomain::uniform(3).unwrap());
        let q = MapField::new(d, flat1(), vec![v(&[0.0]), v(&[1.0]), v(&[2.0])]).unwrap();
        let err = q
            .left_compose(|x| {
                if x[0] > 0.5 {
                    Err(GeomError::InvalidParameter("boom".into()))
                } else {
                    Ok(x.clone())
                }
            })
            .unwrap_err();
        assert!(matches!(err, GeomError::AtSample { index: 1, .. }));
    }

    #[test]
    fn vertical_structure_maps() {
        let m = Arc::new(registry::parse("poincare").unwrap());
        let d = Arc::new(QuadratureDomain::uniform(2).unwrap());
        let q = MapField::new(d, m, vec![v(&[0.0, 1.0]), v(&[0.5, 2.0])]).unwrap();
        let h = TangentField::new(q.clone(), vec![v(&[1.0, 0.0]), v(&[0.2, 0.3])]).unwrap();
        let k = TangentField::new(q.clone(), vec![v(&[0.0, 1.0]), v(&[-0.4, 0.1])]).unwrap();
        let vl = vertical_lift_field(&h, &k).unwrap();
        assert_eq!(vertical_projection_field(&vl).unwrap(), k);
        assert_eq!(connector_field(&vl).unwrap(), k);
        let flipped = canonical_flip_field(&vl).unwrap();
        assert!(matches!(
            vertical_projection_field(&flipped),
            Err(GeomError::AtSample { .. })
        ));
        assert_eq!(canonical_flip_field(&flipped).unwrap(), vl);
    }

    #[test]
    fn spray_and_exp_of_zero_field() {
        let m = Arc::new(registry::parse("sphere:rep=chart").unwrap());
        let d = Arc::new(QuadratureDomain::uniform(2).unwrap());
        let q = MapField::new(d, m, vec![v(&[1.0, 0.0]), v(&[2.0, 1.0])]).unwrap();
        let z = TangentField::zeros(q.clone());
        let s = spray_field(&z).unwrap();
        for (quad, x) in s.quads().iter().zip(q.values()) {
            assert_eq!(&quad.x, x);
            assert_eq!(quad.h.norm() + quad.k.norm() + quad.l.norm(), 0.0);
        }
        assert_eq!(exp_field(&z, 50).unwrap(), q);
    }

    #[test]
    fn flat_lifts() {
        let m = Arc::new(registry::parse("flat:n=2").unwrap());
        let d = Arc::new(QuadratureDomain::uniform(2).unwrap());
        let q = MapField::new(d.clone(), m.clone(), vec![v(&[0.0, 1.0]), v(&[0.5, 2.0])]).unwrap();
        let h = TangentField::new(q.clone(), vec![v(&[1.0, 0.3]), v(&[0.2, 0.3])]).unwrap();
        let e = exp_field(&h, 1000).unwrap();
        assert_eq!(e.values()[0], v(&[1.0, 1.3]));
        assert_eq!(e.values()[1], &q.values()[1] + &h.vecs()[1]);
        let s = spray_field(&h).unwrap();
        assert_eq!(s.quads()[1].l, v(&[0.0, 0.0]));
        let xi = SecondTangentField::new(
            d,
            m,
            vec![
                SecondTangentVector::new(
                    v(&[0.0, 0.0]),
                    v(&[1.0, 0.0]),
                    v(&[2.0, 1.0]),
                    v(&[3.0, 4.0]),
                ),
                SecondTangentVector::new(
                    v(&[1.0, 0.0]),
                    v(&[1.0, 5.0]),
                    v(&[2.0, 1.0]),
                    v(&[-3.0, 4.0]),
                ),
            ],
        )
        .unwrap();
        let k = connector_field(&xi).unwrap();
        assert_eq!(k.vecs(), &[v(&[3.0, 4.0]), v(&[-3.0, 4.0])]);
        let r = curvature_field(&q, &h, &h, &h).unwrap();
        assert!(r.vecs().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn single_sample_matches_manifold_bitwise() {
        let m = Arc::new(registry::parse("sphere:rep=chart").unwrap());
        let d = Arc::new(QuadratureDomain::new(vec![1.0]).unwrap());
        let x = v(&[1.2, 0.4]);
        let hv = v(&[0.3, -0.5]);
        let q = MapField::new(d, m.clone(), vec![x.clone()]).unwrap();
        let h = TangentField::new(q.clone(), vec![hv.clone()]).unwrap();
        let t = TangentVector::new(x.clone(), hv.clone());
        assert_eq!(
            exp_field(&h, 200).unwrap().values()[0],
            m.exp(&t, 200).unwrap()
        );
        assert_eq!(spray_field(&h).unwrap().quads()[0], m.spray(&t).unwrap());
        assert_eq!(
            l2_inner(&q, &h, &h).unwrap(),
            m.inner(&x, &hv, &hv).unwrap()
        );
        let xi = spray_field(&h).unwrap();
        assert_eq!(
            connector_field(&xi).unwrap().vecs()[0],
            m.connector(&xi.quads()[0]).unwrap().vec
        );
    }
}
