//! The L² log map by per-sample shooting.
//!
//! `log_q0(q1)` is computed sample by sample: start from the target's
//! closed-form log when it has one, then refine `h` with damped Newton
//! steps on the endpoint residual `exp_x(h) ⊖ y`. The Jacobian is taken by
//! forward differences along a basis of `T_xN` and each step is solved in
//! the least-squares sense with an SVD.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::manifold::{Manifold, TangentVector, DEFAULT_STEPS};
use crate::mapspace::{l2_inner, lift, MapField, TangentField};

/// Tuning of the shooting solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogOptions {
    /// RK4 steps per exponential evaluation.
    pub steps: usize,
    /// Newton iterations per sample.
    pub max_iterations: usize,
    /// Max-norm tolerance on the endpoint residual.
    pub tolerance: f64,
}

impl Default for LogOptions {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            max_iterations: 50,
            tolerance: 1e-10,
        }
    }
}

const MAX_HALVINGS: usize = 30;

fn endpoint(
    man: &Manifold,
    x: &DVector<f64>,
    h: &DVector<f64>,
    steps: usize,
) -> Result<DVector<f64>> {
    man.exp(&TangentVector::new(x.clone(), h.clone()), steps)
}

/// `log_x(y)` on the target manifold.
pub fn log_point(
    man: &Manifold,
    x: &DVector<f64>,
    y: &DVector<f64>,
    opts: &LogOptions,
) -> Result<DVector<f64>> {
    man.check_point(x)?;
    man.check_point(y)?;
    let mut h = match man.log_hint(x, y) {
        Some(h) => h,
        None => match man {
            Manifold::Chart(_) => man.difference(y, x),
            Manifold::Embedded(e) => e.project(x, &(y - x)),
        },
    };

    let residual_of = |h: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(man.difference(&endpoint(man, x, h, opts.steps)?, y))
    };
    let mut r = residual_of(&h)?;
    let mut rnorm = r.amax();
    let basis = man.tangent_basis(x);
    let dim = basis.ncols();

    for _ in 0..opts.max_iterations {
        if rnorm <= opts.tolerance {
            return Ok(h);
        }
        let delta = 1e-7 * h.norm().max(1.0);
        let mut jac = DMatrix::zeros(r.len(), dim);
        for c in 0..dim {
            let dir = basis.column(c).into_owned();
            let col = match residual_of(&(&h + &dir * delta)) {
                Ok(rp) => (rp - &r) / delta,
                Err(_) => (&r - residual_of(&(&h - &dir * delta))?) / delta,
            };
            jac.set_column(c, &col);
        }
        let step = jac
            .svd(true, true)
            .solve(&(-&r), 1e-14)
            .map_err(|e| GeomError::InvalidParameter(format!("least-squares step failed: {e}")))?;
        let dh = &basis * step;

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = &h + &dh * lambda;
            if let Ok(rt) = residual_of(&trial) {
                let tnorm = rt.amax();
                if tnorm < rnorm {
                    h = trial;
                    r = rt;
                    rnorm = tnorm;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if rnorm <= opts.tolerance {
        return Ok(h);
    }
    Err(GeomError::NoConvergence {
        iterations: opts.max_iterations,
        residual: rnorm,
    })
}

/// `log_{q0}(q1)`: the initial velocity of the L² geodesic from `q0` to `q1`.
pub fn log_field(q0: &MapField, q1: &MapField, opts: &LogOptions) -> Result<TangentField> {
    q0.check_same_space(q1)?;
    let man = q0.manifold();
    let vecs = lift(q0.values(), |i, x| log_point(man, x, &q1.values()[i], opts))?;
    TangentField::new(q0.clone(), vecs)
}

/// `d(q0, q1) = ‖log_{q0}(q1)‖_{L²}`.
pub fn geodesic_distance(q0: &MapField, q1: &MapField, opts: &LogOptions) -> Result<f64> {
    let h = log_field(q0, q1, opts)?;
    Ok(l2_inner(q0, &h, &h)?.max(0.0).sqrt())
}
