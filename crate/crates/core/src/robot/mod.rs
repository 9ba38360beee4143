//! Kinematics of the planar-base mobile manipulator.
//!
//! The state is `[x, y, q1, …, q6]`: a planar translation stage followed by
//! six revolute joints. Each link is a capsule attached to one joint frame
//! (or to the base).

mod kinematics;
mod model;

use nalgebra::{SVector, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub use kinematics::{forward_kinematics, link_jacobians, prediction_jacobians, EndpointJacobian, LinkGeometry, LinkJacobians};
pub use model::{BaseSpec, Frame, JointSpec, KinematicModel, LinkSpec, Origin};

pub const JOINT_COUNT: usize = 6;
pub const STATE_DIM: usize = 2 + JOINT_COUNT;

pub type StateVector = SVector<f64, STATE_DIM>;

#[derive(Debug, Error)]
pub enum RobotError {
    #[error("model: {0}")]
    InvalidModel(String),
    #[error("state: {0}")]
    InvalidState(String),
    #[error("model file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("model file: {0}")]
    Io(#[from] std::io::Error),
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Base position plus joint angles. Joint angles are wrapped on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState", into = "RawState")]
pub struct RobotState {
    base: Vector2<f64>,
    joints: [f64; JOINT_COUNT],
}

#[derive(Serialize, Deserialize)]
struct RawState {
    base: [f64; 2],
    joints: [f64; JOINT_COUNT],
}

impl TryFrom<RawState> for RobotState {
    type Error = RobotError;

    fn try_from(raw: RawState) -> Result<Self, Self::Error> {
        RobotState::new(Vector2::from(raw.base), raw.joints)
    }
}

impl From<RobotState> for RawState {
    fn from(s: RobotState) -> Self {
        RawState { base: [s.base.x, s.base.y], joints: s.joints }
    }
}

impl RobotState {
    pub fn new(base: Vector2<f64>, joints: [f64; JOINT_COUNT]) -> Result<Self, RobotError> {
        if !base.iter().chain(joints.iter()).all(|v| v.is_finite()) {
            return Err(RobotError::InvalidState("non-finite component".into()));
        }
        Ok(Self { base, joints: joints.map(wrap_angle) })
    }

    pub fn zero() -> Self {
        Self { base: Vector2::zeros(), joints: [0.0; JOINT_COUNT] }
    }

    pub fn from_vector(v: &StateVector) -> Result<Self, RobotError> {
        let mut joints = [0.0; JOINT_COUNT];
        joints.copy_from_slice(&v.as_slice()[2..]);
        Self::new(Vector2::new(v[0], v[1]), joints)
    }

    pub fn from_slice(v: &[f64]) -> Result<Self, RobotError> {
        if v.len() != STATE_DIM {
            return Err(RobotError::InvalidState(format!("expected {STATE_DIM} components, got {}", v.len())));
        }
        Self::from_vector(&StateVector::from_column_slice(v))
    }

    pub fn to_vector(&self) -> StateVector {
        let mut v = StateVector::zeros();
        v[0] = self.base.x;
        v[1] = self.base.y;
        v.as_mut_slice()[2..].copy_from_slice(&self.joints);
        v
    }

    pub fn base(&self) -> Vector2<f64> {
        self.base
    }

    pub fn joints(&self) -> &[f64; JOINT_COUNT] {
        &self.joints
    }
}
