use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::disturbance::DisturbanceSpec;
use super::SimError;
use crate::geometry::{Cuboid, Rect3, Segment3};
use crate::robot::{KinematicModel, JOINT_COUNT};
use crate::safety::{Mode, Shape, Workspace};

/// Scenario file, JSON. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Model file, relative to the scenario file; the bundled model if absent.
    #[serde(default)]
    pub model: Option<PathBuf>,
    pub start: StartSpec,
    pub goals: Vec<Goal>,
    #[serde(default)]
    pub workspace: Option<Workspace>,
    /// Duration cap, seconds.
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Option<Mode>,
    pub controller: ControllerGains,
    pub limits: InputLimits,
    pub planner: PlannerSpec,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
    /// Measured obstacle velocity as a fraction of the true one.
    #[serde(default = "one")]
    pub velocity_scale: f64,
    /// Default clearance added to every `R_ij`, meters.
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub jitter: Jitter,
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_dt() -> f64 {
    1e-3
}

fn one() -> f64 {
    1.0
}

fn default_margin() -> f64 {
    0.05
}

fn default_tolerance() -> f64 {
    0.1
}

fn default_activation() -> f64 {
    1.0
}

fn default_period() -> f64 {
    5e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    pub base: [f64; 2],
    pub joints: [f64; JOINT_COUNT],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Goal {
    pub position: [f64; 2],
    /// Hold time at this waypoint before moving on, seconds.
    #[serde(default)]
    pub pause: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains {
    pub base_gain: f64,
    pub base_speed: f64,
    pub joint_gain: f64,
    pub joint_speed: f64,
    pub carry_pose: [f64; JOINT_COUNT],
    #[serde(default = "default_tolerance")]
    pub goal_tolerance: f64,
}

/// Box `|u_i| ≤ limit` on base and joint channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputLimits {
    pub base: f64,
    pub joint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSpec {
    pub gamma: f64,
    pub alpha: f64,
    /// Defaults to `alpha`.
    #[serde(default)]
    pub mu: Option<f64>,
    pub beta: f64,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_activation")]
    pub activation_h: f64,
    /// Initial observer error bound; defaults to `omega0`.
    #[serde(default)]
    pub e0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Jitter {
    /// Uniform perturbation of each initial joint angle, radians.
    #[serde(default)]
    pub joints: f64,
    /// Uniform delay added to each moving obstacle's script, seconds.
    #[serde(default)]
    pub obstacle_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    Capsule {
        p0: [f64; 3],
        p1: [f64; 3],
        radius: f64,
    },
    Cuboid {
        center: [f64; 3],
        size: [f64; 3],
        /// Fixed-axis roll, pitch, yaw, radians.
        #[serde(default)]
        rpy: [f64; 3],
        #[serde(default)]
        exact: bool,
    },
    Rect {
        center: [f64; 3],
        u_axis: [f64; 3],
        v_axis: [f64; 3],
        half_u: f64,
        half_v: f64,
    },
}

/// One leg of a piecewise-constant velocity script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionLeg {
    pub duration: f64,
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MotionSpec {
    #[default]
    Static,
    /// Piecewise-constant velocity after `delay`; repeats if `cycle`.
    Legs {
        #[serde(default)]
        delay: f64,
        legs: Vec<MotionLeg>,
        #[serde(default)]
        cycle: bool,
    },
    /// Offsets from the initial pose at the given times, linearly interpolated.
    Waypoints {
        #[serde(default)]
        delay: f64,
        times: Vec<f64>,
        offsets: Vec<[f64; 3]>,
        #[serde(default)]
        cycle: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub id: String,
    pub shape: ShapeSpec,
    #[serde(default)]
    pub motion: MotionSpec,
    #[serde(default)]
    pub margin: Option<f64>,
}

impl ShapeSpec {
    pub fn build(&self) -> Result<Shape, SimError> {
        Ok(match self {
            ShapeSpec::Sphere { center, radius } => Shape::Sphere { center: Vector3::from(*center), radius: *radius },
            ShapeSpec::Capsule { p0, p1, radius } => Shape::Capsule {
                segment: Segment3::new(Vector3::from(*p0), Vector3::from(*p1)),
                radius: *radius,
            },
            ShapeSpec::Cuboid { center, size, rpy, exact } => {
                let rot: Matrix3<f64> = *Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]).matrix();
                Shape::Cuboid { cuboid: Cuboid::new(Vector3::from(*center), *size, rot)?, exact: *exact }
            }
            ShapeSpec::Rect { center, u_axis, v_axis, half_u, half_v } => Shape::Rect {
                rect: Rect3::from_center(Vector3::from(*center), Vector3::from(*u_axis), Vector3::from(*v_axis), *half_u, *half_v)?,
            },
        })
    }
}

impl MotionSpec {
    /// Legs equivalent to this script, with the start delay.
    pub fn legs(&self) -> Result<(f64, Vec<(f64, Vector3<f64>)>, bool), String> {
        match self {
            MotionSpec::Static => Ok((0.0, Vec::new(), false)),
            MotionSpec::Legs { delay, legs, cycle } => {
                let out: Vec<_> = legs.iter().map(|l| (l.duration, Vector3::from(l.velocity))).collect();
                if out.iter().any(|(d, v)| !(*d > 0.0) || !v.iter().all(|c| c.is_finite())) {
                    return Err("legs need positive durations and finite velocities".into());
                }
                Ok((*delay, out, *cycle))
            }
            MotionSpec::Waypoints { delay, times, offsets, cycle } => {
                if times.len() != offsets.len() || times.len() < 2 {
                    return Err("waypoints need matching times and offsets, at least two".into());
                }
                let mut out = Vec::new();
                for k in 1..times.len() {
                    let d = times[k] - times[k - 1];
                    if !(d > 0.0) {
                        return Err("waypoint times must increase".into());
                    }
                    out.push((d, (Vector3::from(offsets[k]) - Vector3::from(offsets[k - 1])) / d));
                }
                Ok((*delay, out, *cycle))
            }
        }
    }
}

impl Scenario {
    pub fn from_json_str(s: &str) -> Result<Self, SimError> {
        let sc: Scenario = serde_json::from_str(s).map_err(|e| SimError::Parse { file: None, source: e })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io { file: path.to_path_buf(), source: e })?;
        let mut sc: Scenario =
            serde_json::from_str(&text).map_err(|e| SimError::Parse { file: Some(path.to_path_buf()), source: e })?;
        sc.base_dir = path.parent().map(Path::to_path_buf);
        sc.validate()?;
        Ok(sc)
    }

    pub fn load_model(&self) -> Result<KinematicModel, SimError> {
        match &self.model {
            None => Ok(KinematicModel::default_model()),
            Some(p) => {
                let full = match &self.base_dir {
                    Some(d) if p.is_relative() => d.join(p),
                    _ => p.clone(),
                };
                Ok(KinematicModel::from_path(full)?)
            }
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field: &str, msg: String| Err(SimError::Config { field: field.to_string(), msg });
        if !(self.dt > 0.0 && self.dt <= crate::observer::MAX_STEP) {
            return bad("dt", format!("must lie in (0, 0.1], got {}", self.dt));
        }
        if !(self.duration >= 0.0) {
            return bad("duration", format!("must be non-negative, got {}", self.duration));
        }
        if self.goals.is_empty() {
            return bad("goals", "at least one goal is required".into());
        }
        if !(self.velocity_scale > 0.0 && self.velocity_scale <= 1.0) {
            return bad("velocity_scale", format!("must lie in (0, 1], got {}", self.velocity_scale));
        }
        if !(self.planner.period >= self.dt) {
            return bad("planner.period", format!("must be at least dt = {}, got {}", self.dt, self.planner.period));
        }
        if !(self.planner.activation_h > 0.0) {
            return bad("planner.activation_h", format!("must be positive, got {}", self.planner.activation_h));
        }
        if !(self.limits.base > 0.0 && self.limits.joint > 0.0) {
            return bad("limits", "limits must be positive".into());
        }
        let c = &self.controller;
        if !(c.base_gain > 0.0 && c.base_speed > 0.0 && c.joint_gain > 0.0 && c.joint_speed > 0.0 && c.goal_tolerance > 0.0) {
            return bad("controller", "gains, speeds and goal_tolerance must be positive".into());
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            o.shape.build().map_err(|e| SimError::Config { field: format!("obstacles[{i}].shape"), msg: e.to_string() })?;
            o.motion.legs().map_err(|msg| SimError::Config { field: format!("obstacles[{i}].motion"), msg })?;
        }
        self.disturbance.validate()?;
        Ok(())
    }

    /// Largest speed appearing in an obstacle's script.
    pub fn max_script_speed(spec: &ObstacleSpec) -> f64 {
        spec.motion.legs().map(|(_, legs, _)| legs.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max)).unwrap_or(0.0)
    }
}
