//! Disturbance observer for the matched-disturbance kinematics `ẋ = u + d`.
//!
//! With observer gain `λ = I` and `W(x) = x` the observer reads
//!
//! ```text
//! d̂ = z + α x
//! ż = −α (u + d̂)
//! ```
//!
//! so the estimation error obeys `ė = −α e − ḋ`, and under
//! `‖d‖ ≤ ω0, ‖ḋ‖ ≤ ω1` it stays inside the envelope of [`error_bound`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::robot::{wrap_angle, RobotState, StateVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObserverError {
    #[error("observer gain alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("mu must lie in (0, 2*alpha) = (0, {two_alpha}), got {mu}")]
    MuOutOfRange { mu: f64, two_alpha: f64 },
    #[error("disturbance bounds must be non-negative (omega0 = {omega0}, omega1 = {omega1})")]
    NegativeBound { omega0: f64, omega1: f64 },
    #[error("time step must lie in (0, {max}] s, got {dt}")]
    BadStep { dt: f64, max: f64 },
    #[error("non-finite observer input")]
    NonFinite,
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
}

pub const MAX_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DobState {
    pub z: StateVector,
    pub d_hat: StateVector,
    pub alpha: f64,
    /// `W(x) = x` on the continuous lift of the joint angles, so wrapping at
    /// ±π does not show up as a jump in the estimate.
    pub w: StateVector,
}

/// Advances the lifted state by the wrapped increment to `x`.
fn lift(prev: &StateVector, x: &RobotState) -> StateVector {
    let mut delta = x.to_vector() - prev;
    for v in delta.iter_mut().skip(2) {
        *v = wrap_angle(*v);
    }
    prev + delta
}

/// Starts the observer with `d̂(0) = 0`.
pub fn dob_init(x0: &RobotState, alpha: f64) -> Result<DobState, ObserverError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ObserverError::NonPositiveAlpha(alpha));
    }
    let w = x0.to_vector();
    Ok(DobState { z: -w * alpha, d_hat: StateVector::zeros(), alpha, w })
}

/// One explicit-Euler step: `z ← z − dt·α(u + d̂)`, then `d̂ ← z + α x` at the new state.
pub fn dob_update(s: &DobState, x: &RobotState, u: &StateVector, dt: f64) -> Result<DobState, ObserverError> {
    if !(dt > 0.0 && dt <= MAX_STEP) {
        return Err(ObserverError::BadStep { dt, max: MAX_STEP });
    }
    if !u.iter().all(|v| v.is_finite()) {
        return Err(ObserverError::NonFinite);
    }
    let z = s.z - (u + s.d_hat) * (dt * s.alpha);
    let w = lift(&s.w, x);
    let d_hat = z + w * s.alpha;
    Ok(DobState { z, d_hat, alpha: s.alpha, w })
}

/// Known bounds on the disturbance and the observer's Lyapunov split `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceBounds {
    pub omega0: f64,
    pub omega1: f64,
    pub alpha: f64,
    pub mu: f64,
}

impl DisturbanceBounds {
    pub fn new(omega0: f64, omega1: f64, alpha: f64, mu: f64) -> Result<Self, ObserverError> {
        if !(alpha > 0.0) {
            return Err(ObserverError::NonPositiveAlpha(alpha));
        }
        if !(mu > 0.0 && mu < 2.0 * alpha) {
            return Err(ObserverError::MuOutOfRange { mu, two_alpha: 2.0 * alpha });
        }
        if !(omega0 >= 0.0 && omega1 >= 0.0) {
            return Err(ObserverError::NegativeBound { omega0, omega1 });
        }
        Ok(Self { omega0, omega1, alpha, mu })
    }

    /// `κ = α − μ/2`, positive by construction.
    pub fn kappa(&self) -> f64 {
        self.alpha - self.mu / 2.0
    }

    /// Limit of the error envelope as `t → ∞`.
    pub fn steady_state_error(&self) -> f64 {
        if self.omega1 == 0.0 {
            0.0
        } else {
            self.omega1 / (2.0 * self.mu * self.kappa()).sqrt()
        }
    }
}

/// `sqrt(e0² e^{−2κt} + ω1² (1 − e^{−2κt}) / (2 μ κ))`.
pub fn error_bound(t: f64, e0: f64, b: &DisturbanceBounds) -> Result<f64, ObserverError> {
    if !(t >= 0.0) {
        return Err(ObserverError::NegativeTime(t));
    }
    let k = b.kappa();
    let decay = (-2.0 * k * t).exp();
    let forced = if b.omega1 == 0.0 { 0.0 } else { b.omega1 * b.omega1 * (1.0 - decay) / (2.0 * b.mu * k) };
    Ok((e0 * e0 * decay + forced).sqrt())
}

/// `Γ = ω0 + sqrt(ω0² + ω1² / (2 μ κ))`, a bound on `‖d̂‖` when `d̂(0) = 0`.
pub fn gamma_bound(b: &DisturbanceBounds) -> f64 {
    let s = b.steady_state_error();
    b.omega0 + (b.omega0 * b.omega0 + s * s).sqrt()
}
