//! Fixed-step classical Runge–Kutta.
//!
//! Geodesic states are `(position, velocity)` pairs; the right-hand side is
//! `(ẋ, v̇) = (v, a(x, v))` for some acceleration field `a`.

use nalgebra::DVector;

use crate::error::Result;

/// Position and velocity of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
}

impl PhaseState {
    pub fn new(x: DVector<f64>, v: DVector<f64>) -> Self {
        Self { x, v }
    }
}

/// One RK4 step of size `dt` for `ẍ = accel(x, ẋ)`.
///
/// `accel` may fail (e.g. a stage point leaves the chart); the error is
/// passed through unchanged.
pub fn rk4_second_order<F>(state: &PhaseState, dt: f64, accel: F) -> Result<PhaseState>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> Result<DVector<f64>>,
{
    let x = &state.x;
    let v = &state.v;
    let half = 0.5 * dt;

    let k1x = v.clone();
    let k1v = accel(x, v)?;

    let x2 = x + &k1x * half;
    let v2 = v + &k1v * half;
    let k2v = accel(&x2, &v2)?;
    let k2x = v2;

    let x3 = x + &k2x * half;
    let v3 = v + &k2v * half;
    let k3v = accel(&x3, &v3)?;
    let k3x = v3;

    let x4 = x + &k3x * dt;
    let v4 = v + &k3v * dt;
    let k4v = accel(&x4, &v4)?;
    let k4x = v4;

    let sixth = dt / 6.0;
    let x_next = x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * sixth;
    let v_next = v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * sixth;
    Ok(PhaseState::new(x_next, v_next))
}
