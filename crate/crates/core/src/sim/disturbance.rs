use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::robot::{StateVector, STATE_DIM};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceSpec {
    #[default]
    None,
    /// `d_i(t) = A_i sin(f_i t + φ_i)`; phases are drawn per run when absent.
    Trigonometric {
        amplitude: [f64; STATE_DIM],
        frequency: [f64; STATE_DIM],
        #[serde(default)]
        phase: Option<[f64; STATE_DIM]>,
    },
}

impl DisturbanceSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if let DisturbanceSpec::Trigonometric { amplitude, frequency, phase } = self {
            let ok = amplitude.iter().all(|a| *a >= 0.0 && a.is_finite())
                && frequency.iter().all(|f| *f >= 0.0 && f.is_finite())
                && phase.map_or(true, |p| p.iter().all(|v| v.is_finite()));
            if !ok {
                return Err(SimError::Config {
                    field: "disturbance".into(),
                    msg: "amplitudes and frequencies must be finite and non-negative".into(),
                });
            }
        }
        Ok(())
    }

    pub fn profile<R: Rng>(&self, rng: &mut R) -> DisturbanceProfile {
        match self {
            DisturbanceSpec::None => DisturbanceProfile::none(),
            DisturbanceSpec::Trigonometric { amplitude, frequency, phase } => {
                let phase = phase.unwrap_or_else(|| std::array::from_fn(|_| rng.random_range(0.0..2.0 * PI)));
                DisturbanceProfile {
                    amplitude: StateVector::from(*amplitude),
                    frequency: StateVector::from(*frequency),
                    phase: StateVector::from(phase),
                }
            }
        }
    }
}

/// Per-channel sinusoid; all-zero amplitude means no disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisturbanceProfile {
    pub amplitude: StateVector,
    pub frequency: StateVector,
    pub phase: StateVector,
}

impl DisturbanceProfile {
    pub fn none() -> Self {
        Self { amplitude: StateVector::zeros(), frequency: StateVector::zeros(), phase: StateVector::zeros() }
    }

    pub fn at(&self, t: f64) -> StateVector {
        StateVector::from_fn(|i, _| self.amplitude[i] * (self.frequency[i] * t + self.phase[i]).sin())
    }

    pub fn rate(&self, t: f64) -> StateVector {
        StateVector::from_fn(|i, _| self.amplitude[i] * self.frequency[i] * (self.frequency[i] * t + self.phase[i]).cos())
    }

    /// `‖A‖₂ ≥ ‖d(t)‖` for every `t`.
    pub fn omega0(&self) -> f64 {
        self.amplitude.norm()
    }

    /// `‖A ∘ f‖₂ ≥ ‖ḋ(t)‖` for every `t`.
    pub fn omega1(&self) -> f64 {
        self.amplitude.component_mul(&self.frequency).norm()
    }
}

/// Obstacle velocity as reported to the planner: `v̂ = s·v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VelocityCorruption {
    pub scale: f64,
}

impl VelocityCorruption {
    pub fn measure(&self, v: &Vector3<f64>) -> Vector3<f64> {
        v * self.scale
    }

    /// `(1 − s)·max_speed`, the smallest admissible `ε_v`.
    pub fn eps_v(&self, max_speed: f64) -> f64 {
        (1.0 - self.scale) * max_speed
    }
}
