//! Safety values `h_ij` and their linear QP rows for each planner mode.
//!
//! For link capsule `i` and obstacle part `j`,
//! `h = D*(L_i(x + T ẋ_prev), p_j + T v̂_j) − R_ij²` with `R_ij` the sum of
//! both radii and the obstacle's margin. The QP row is `a·u ≥ b` with
//! `a = ∂h/∂x` and `b = −φ_mode`.

mod obstacle;
mod rows;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use obstacle::{Obstacle, ObstaclePart, Shape};
pub use rows::{
    boundary_rows, build_row, obstacle_rows, predict_link, predicted_links, prune_rows, safety_report, safety_value,
    self_collision_rows, true_min_h, write_rows_csv, ConstraintRow, LinkState, ObstacleMotion, PruneStats, RowSource,
    SafetyReport, SafetyValue, Workspace,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SafetyError {
    #[error("invalid parameters: {0} is violated ({1})")]
    Hypothesis(&'static str, String),
    #[error("obstacle {id}: {msg}")]
    Obstacle { id: String, msg: String },
    #[error("unknown mode '{0}' (expected cbf, dcbf, r1cbf, r2cbf or rdcbf)")]
    UnknownMode(String),
    #[error("{0}")]
    Geometry(#[from] crate::geometry::GeometryError),
}

/// Planner variants. R1 keeps only the disturbance compensation, R2 only the
/// velocity-error compensation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cbf,
    Dcbf,
    R1cbf,
    R2cbf,
    Rdcbf,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Cbf, Mode::Dcbf, Mode::R1cbf, Mode::R2cbf, Mode::Rdcbf];
    /// The ablation family compared in benchmarks.
    pub const ABLATION: [Mode; 4] = [Mode::Dcbf, Mode::R1cbf, Mode::R2cbf, Mode::Rdcbf];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Cbf => "cbf",
            Mode::Dcbf => "dcbf",
            Mode::R1cbf => "r1cbf",
            Mode::R2cbf => "r2cbf",
            Mode::Rdcbf => "rdcbf",
        }
    }

    pub fn uses_obstacle_velocity(self) -> bool {
        self != Mode::Cbf
    }

    pub fn compensates_disturbance(self) -> bool {
        matches!(self, Mode::R1cbf | Mode::Rdcbf)
    }

    pub fn compensates_velocity_error(self) -> bool {
        matches!(self, Mode::R2cbf | Mode::Rdcbf)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = SafetyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SafetyError::UnknownMode(s.to_string()))
    }
}

/// Gains and bounds of the robust constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdcbfParams {
    pub gamma: f64,
    pub alpha: f64,
    pub mu: f64,
    pub beta: f64,
    /// Planning period used for the one-step prediction, seconds.
    pub period: f64,
    pub omega0: f64,
    pub omega1: f64,
}

impl RdcbfParams {
    /// Checks every hypothesis that does not involve the initial scene.
    pub fn validate(&self) -> Result<(), SafetyError> {
        let fail = |name: &'static str, detail: String| Err(SafetyError::Hypothesis(name, detail));
        let all = [self.gamma, self.alpha, self.mu, self.beta, self.period, self.omega0, self.omega1];
        if !all.iter().all(|v| v.is_finite()) {
            return fail("finite parameters", format!("{self:?}"));
        }
        if !(self.gamma > 0.0) {
            return fail("gamma > 0", format!("gamma = {}", self.gamma));
        }
        if !(self.mu > 0.0 && self.mu < 2.0 * self.alpha) {
            return fail("0 < mu < 2*alpha", format!("mu = {}, alpha = {}", self.mu, self.alpha));
        }
        if !(self.alpha > (self.gamma + self.mu) / 2.0) {
            return fail(
                "alpha > (gamma+mu)/2",
                format!("alpha = {}, (gamma+mu)/2 = {}", self.alpha, (self.gamma + self.mu) / 2.0),
            );
        }
        if !(self.beta > 0.0) {
            return fail("beta > 0", format!("beta = {}", self.beta));
        }
        if !(self.period > 0.0) {
            return fail("T > 0", format!("T = {}", self.period));
        }
        if !(self.omega0 >= 0.0 && self.omega1 >= 0.0) {
            return fail("omega0, omega1 >= 0", format!("omega0 = {}, omega1 = {}", self.omega0, self.omega1));
        }
        Ok(())
    }

    /// Checks the remaining hypotheses against the initial scene: `h0 > 0`
    /// and `beta > e0²/(2 h0)`.
    pub fn validate_initial(&self, h0: f64, e0: f64) -> Result<(), SafetyError> {
        self.validate()?;
        if !(h0 > 0.0) {
            return Err(SafetyError::Hypothesis("h0 > 0", format!("h0 = {h0}")));
        }
        let need = e0 * e0 / (2.0 * h0);
        if !(self.beta > need) {
            return Err(SafetyError::Hypothesis(
                "beta > e0^2/(2*h0)",
                format!("beta = {}, e0 = {e0}, h0 = {h0}, e0^2/(2*h0) = {need}", self.beta),
            ));
        }
        Ok(())
    }

    /// `4α − 2μ − 2γ`, the denominator of `χ`.
    pub fn chi_denominator(&self) -> f64 {
        4.0 * self.alpha - 2.0 * self.mu - 2.0 * self.gamma
    }

    /// With `ω0 = ω1 = 0` the observer error is identically zero and the
    /// Young's-inequality terms are not needed.
    pub fn disturbance_free(&self) -> bool {
        self.omega0 == 0.0 && self.omega1 == 0.0
    }
}
