use nalgebra::Vector3;

use super::disturbance::VelocityCorruption;
use crate::safety::{Obstacle, SafetyError};

/// An obstacle moving on a piecewise-constant velocity script.
#[derive(Debug, Clone)]
pub struct ScriptedObstacle {
    pub obstacle: Obstacle,
    pub delay: f64,
    pub legs: Vec<(f64, Vector3<f64>)>,
    pub cycle: bool,
    pub corruption: VelocityCorruption,
}

impl ScriptedObstacle {
    /// Scripted velocity at time `t`; zero before the delay and after a
    /// non-cycling script ends.
    pub fn velocity_at(&self, t: f64) -> Vector3<f64> {
        let total: f64 = self.legs.iter().map(|l| l.0).sum();
        let mut tau = t - self.delay;
        if tau < 0.0 || self.legs.is_empty() {
            return Vector3::zeros();
        }
        if self.cycle {
            tau = tau.rem_euclid(total);
        }
        for (d, v) in &self.legs {
            if tau < *d {
                return *v;
            }
            tau -= d;
        }
        Vector3::zeros()
    }

    /// Refreshes true and measured velocity for time `t`.
    pub fn sense(&mut self, t: f64) -> Result<(), SafetyError> {
        let v = self.velocity_at(t);
        self.obstacle.set_velocity(v, self.corruption.measure(&v))
    }

    /// Explicit Euler with the current true velocity.
    pub fn advance(&mut self, dt: f64) {
        let d = self.obstacle.velocity * dt;
        if d != Vector3::zeros() {
            self.obstacle.translate(&d);
        }
    }
}
