//! Property tests of the invariants in the spec, over seeded random fields
//! on every registry manifold.

use std::sync::Arc;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use l2geom::dynamics::{integrate_geodesic, log_field, parallel_transport_field, LogOptions};
use l2geom::manifold::{registry, Manifold, SecondTangentVector};
use l2geom::mapspace::{
    canonical_flip_field, connector_field, exp_field, l2_inner, vertical_lift_field, MapField,
    QuadratureDomain, SecondTangentField, TangentField,
};
use l2geom::reparam::{
    act_on_map, act_on_tangent, check_equivariance, DiscreteDiffeo, EquivarianceInputs,
    EquivariantOp,
};
use l2geom::transport::{wasserstein2_assignment, wasserstein2_bruteforce, DiscreteMeasure};
use l2geom::verification::{random_fields, random_point, random_tangent};

fn registry_manifold(i: usize) -> Arc<Manifold> {
    Arc::new(registry::all_defaults().swap_remove(i))
}

fn random_domain(rng: &mut ChaCha8Rng, m: usize) -> Arc<QuadratureDomain> {
    let w = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    Arc::new(QuadratureDomain::new(w).unwrap())
}

fn setup(
    man: usize,
    m: usize,
    seed: u64,
    count: usize,
) -> (MapField, Vec<TangentField>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = random_domain(&mut rng, m);
    let (q, f) = random_fields(&registry_manifold(man), &d, count, &mut rng).unwrap();
    (q, f, rng)
}

fn second(h: &TangentField, k: &TangentField, l: &TangentField) -> SecondTangentField {
    let quads = (0..h.len())
        .map(|i| {
            SecondTangentVector::new(
                h.base().values()[i].clone(),
                h.vecs()[i].clone(),
                k.vecs()[i].clone(),
                l.vecs()[i].clone(),
            )
        })
        .collect();
    SecondTangentField::new(h.domain().clone(), h.manifold().clone(), quads).unwrap()
}

fn max_diff(a: &TangentField, b: &TangentField) -> f64 {
    a.vecs()
        .iter()
        .zip(b.vecs())
        .map(|(x, y)| (x - y).amax())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Lifted connector axioms hold samplewise (K∘vl = pr₂, K∘κ = K,
    /// linearity in (k,l) and in (h,l)).
    #[test]
    fn lifted_connector_axioms(man in 0usize..6, m in 1usize..6, seed in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let (_, f, _) = setup(man, m, seed, 5);
        let (h, k, l, k2, l2) = (&f[0], &f[1], &f[2], &f[3], &f[4]);
        let vl = connector_field(&vertical_lift_field(h, k).unwrap()).unwrap();
        prop_assert!(max_diff(&vl, k) < 1e-10);
        let xi = second(h, k, l);
        let flipped = connector_field(&canonical_flip_field(&xi).unwrap()).unwrap();
        prop_assert!(max_diff(&flipped, &connector_field(&xi).unwrap()) < 1e-10);

        let comb = |x: &TangentField, y: &TangentField| x.scale(a).add(&y.scale(b)).unwrap();
        let lhs = connector_field(&second(h, &comb(k, k2), &comb(l, l2))).unwrap();
        let rhs = comb(&connector_field(&second(h, k, l)).unwrap(), &connector_field(&second(h, k2, l2)).unwrap());
        prop_assert!(max_diff(&lhs, &rhs) < 1e-10);
        let lhs = connector_field(&second(&comb(h, k2), k, &comb(l, l2))).unwrap();
        let rhs = comb(&connector_field(&second(h, k, l)).unwrap(), &connector_field(&second(k2, k, l2)).unwrap());
        prop_assert!(max_diff(&lhs, &rhs) < 1e-10);
    }

    /// G is symmetric, bilinear and positive definite.
    #[test]
    fn l2_inner_is_an_inner_product(man in 0usize..6, m in 1usize..8, seed in any::<u64>(), a in -3.0..3.0f64) {
        let (q, f, _) = setup(man, m, seed, 3);
        let (h, k, l) = (&f[0], &f[1], &f[2]);
        let g = |x: &TangentField, y: &TangentField| l2_inner(&q, x, y).unwrap();
        prop_assert!((g(h, k) - g(k, h)).abs() < 1e-12);
        let lin = g(&h.scale(a).add(l).unwrap(), k);
        prop_assert!((lin - (a * g(h, k) + g(l, k))).abs() < 1e-10);
        let hh = g(h, h);
        let nonzero = h.vecs().iter().any(|v| v.amax() > 0.0);
        let positive = if nonzero { hh > 0.0 } else { hh == 0.0 };
        prop_assert!(positive);
        prop_assert_eq!(g(&TangentField::zeros(q.clone()), k), 0.0);
    }

    /// Equal weights: G is invariant under every permutation (1e-12).
    #[test]
    fn metric_permutation_invariance(man in 0usize..6, m in 1usize..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Arc::new(QuadratureDomain::uniform(m).unwrap());
        let (q, f) = random_fields(&registry_manifold(man), &d, 2, &mut rng).unwrap();
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut rng);
        let phi = DiscreteDiffeo::new(perm, &d).unwrap();
        prop_assert!(phi.is_measure_preserving(&d));
        let lhs = l2_inner(&act_on_map(&phi, &q).unwrap(), &act_on_tangent(&phi, &f[0]).unwrap(), &act_on_tangent(&phi, &f[1]).unwrap()).unwrap();
        prop_assert!((lhs - l2_inner(&q, &f[0], &f[1]).unwrap()).abs() < 1e-12);
    }

    /// The permutation action is a group action and all lifted operators
    /// are bitwise equivariant, whatever the weights.
    #[test]
    fn action_and_equivariance(man in 0usize..6, m in 1usize..6, seed in any::<u64>()) {
        let (_, f, mut rng) = setup(man, m, seed, 3);
        let d = f[0].domain().clone();
        let mut p1: Vec<usize> = (0..m).collect();
        let mut p2 = p1.clone();
        p1.shuffle(&mut rng);
        p2.shuffle(&mut rng);
        let phi = DiscreteDiffeo::new(p1, &d).unwrap();
        let psi = DiscreteDiffeo::new(p2, &d).unwrap();
        let composed = act_on_tangent(&phi.compose(&psi).unwrap(), &f[0]).unwrap();
        prop_assert_eq!(composed, act_on_tangent(&phi, &act_on_tangent(&psi, &f[0]).unwrap()).unwrap());
        // Short geodesics keep the polar chart away from its poles.
        let inputs = EquivarianceInputs { h: f[0].scale(0.2), k: f[1].clone(), l: f[2].clone(), steps: 20 };
        for op in EquivariantOp::ALL {
            let r = check_equivariance(&phi, op, &inputs).unwrap();
            prop_assert!(r.passed, "{:?}", r);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// log ∘ exp = id inside the convergence region (1e-7).
    #[test]
    fn exp_log_round_trip(man in prop::sample::select(vec![0usize, 1, 2, 3, 4, 5]), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let man = registry_manifold(man);
        let d = Arc::new(QuadratureDomain::uniform(3).unwrap());
        let values: Vec<_> = (0..3).map(|_| random_point(&man, &mut rng)).collect();
        let q0 = MapField::new(d, man.clone(), values).unwrap();
        // Keep |h| moderate so chart geodesics stay in the sampling box.
        let vecs = q0.values().iter().map(|x| random_tangent(&man, x, &mut rng) * 0.4).collect();
        let h = TangentField::new(q0.clone(), vecs).unwrap();
        let q1 = exp_field(&h, 1000).unwrap();
        let back = log_field(&q0, &q1, &LogOptions::default()).unwrap();
        prop_assert!(max_diff(&back, &h) < 1e-7, "{}", max_diff(&back, &h));
    }

    /// Integrating back from (q1, −q̇(1)) returns to q0 (1e-7).
    #[test]
    fn time_reversal(man in 0usize..6, seed in any::<u64>()) {
        let (q0, f, _) = setup(man, 3, seed, 1);
        let h = f[0].scale(0.5);
        let (path, _) = integrate_geodesic(&h, 11, 100).unwrap();
        let back_v = path.velocities().unwrap().last().unwrap().scale(-1.0);
        let back = exp_field(&back_v, 1000).unwrap();
        for (a, b) in back.values().iter().zip(q0.values()) {
            prop_assert!((q0.manifold().difference(a, b)).amax() < 1e-7);
        }
    }

    /// Parallel transport along integrated geodesics preserves G(v, v).
    #[test]
    fn transport_preserves_norm(man in 0usize..6, seed in any::<u64>()) {
        let (q0, f, _) = setup(man, 4, seed, 2);
        let (path, _) = integrate_geodesic(&f[0].scale(0.5), 1001, 1).unwrap();
        let v1 = parallel_transport_field(&path, &f[1]).unwrap();
        let before = l2_inner(&q0, &f[1], &f[1]).unwrap();
        let after = l2_inner(path.last(), &v1, &v1).unwrap();
        prop_assert!((before - after).abs() < 1e-6 * before.max(1.0), "{} vs {}", before, after);
    }

    /// W₂ is symmetric and satisfies the triangle inequality (n ≤ 6).
    #[test]
    fn wasserstein_is_a_metric(n in 1usize..7, dim in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut measure = || DiscreteMeasure::uniform(
            (0..n).map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0))).collect()
        ).unwrap();
        let (a, b, c) = (measure(), measure(), measure());
        let w = |x: &DiscreteMeasure, y: &DiscreteMeasure| wasserstein2_bruteforce(x, y).unwrap().cost.sqrt();
        prop_assert!((w(&a, &b) - w(&b, &a)).abs() < 1e-10);
        prop_assert!(w(&a, &c) <= w(&a, &b) + w(&b, &c) + 1e-10);
        prop_assert_eq!(wasserstein2_assignment(&a, &b).unwrap().cost, wasserstein2_bruteforce(&a, &b).unwrap().cost);
    }
}
