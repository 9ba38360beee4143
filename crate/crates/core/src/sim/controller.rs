use nalgebra::Vector2;

use super::scenario::ControllerGains;
use crate::robot::{wrap_angle, RobotState, StateVector};

/// Proportional base command toward `goal`, saturated in norm at
/// `base_speed`; per-joint proportional regulation to the carry pose,
/// clamped at `joint_speed`.
pub fn nominal_controller(state: &RobotState, goal: &Vector2<f64>, gains: &ControllerGains) -> StateVector {
    let mut u = StateVector::zeros();
    let mut v = (goal - state.base()) * gains.base_gain;
    let n = v.norm();
    if n > gains.base_speed {
        v *= gains.base_speed / n;
    }
    u[0] = v.x;
    u[1] = v.y;
    for (i, (&q, &c)) in state.joints().iter().zip(&gains.carry_pose).enumerate() {
        u[2 + i] = (gains.joint_gain * wrap_angle(c - q)).clamp(-gains.joint_speed, gains.joint_speed);
    }
    u
}
