//! Closed-loop simulation: scripted obstacles, injected disturbance, the
//! nominal controller and the safety filter.

mod batch;
mod controller;
pub mod disturbance;
mod record;
pub mod scenario;
mod script;
mod world;

use std::path::PathBuf;

use thiserror::Error;

pub use batch::{monte_carlo, Aggregate, BatchResult};
pub use controller::nominal_controller;
pub use disturbance::{DisturbanceProfile, DisturbanceSpec, VelocityCorruption};
pub use record::{EffectiveConfig, RunRecord, Sample, Summary, Timing};
pub use scenario::{ControllerGains, Goal, InputLimits, MotionSpec, ObstacleSpec, PlannerSpec, Scenario, ShapeSpec};
pub use script::ScriptedObstacle;
pub use world::{run, RunOverrides, World};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{}: {source}", file.as_ref().map_or("scenario".to_string(), |f| f.display().to_string()))]
    Parse { file: Option<PathBuf>, source: serde_json::Error },
    #[error("{}: {source}", file.display())]
    Io { file: PathBuf, source: std::io::Error },
    #[error("config field '{field}': {msg}")]
    Config { field: String, msg: String },
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Robot(#[from] crate::robot::RobotError),
    #[error(transparent)]
    Safety(#[from] crate::safety::SafetyError),
    #[error(transparent)]
    Observer(#[from] crate::observer::ObserverError),
}

impl SimError {
    /// Parameter and scenario problems, as opposed to I/O failures.
    pub fn is_config(&self) -> bool {
        !matches!(self, SimError::Io { .. })
    }
}
