//! Safety-filter QP: `min ½‖u − u_nom‖²` subject to `a_k·u ≥ b_k` and
//! `lb ≤ u ≤ ub`.

mod active_set;
mod nnls;

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::robot::{StateVector, STATE_DIM};
use active_set::{project, ProjectError};
pub use nnls::nnls;

/// Rows with slack at or below this count as active in [`check_kkt`].
pub const ACTIVE_TOL: f64 = 1e-8;
/// Weight of the deviation term while minimizing violation.
const RELAX_DEVIATION_WEIGHT: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("problem dump: {0}")]
    Io(#[from] std::io::Error),
    #[error("problem dump: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpRow {
    pub a: StateVector,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpProblem {
    pub u_nom: StateVector,
    pub rows: Vec<QpRow>,
    pub lb: StateVector,
    pub ub: StateVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QpStatus {
    Optimal,
    Relaxed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub u: StateVector,
    pub status: QpStatus,
    /// Total violation of the safety rows; zero unless relaxed.
    pub slack: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Multipliers of the safety rows, in row order.
    pub multipliers: Vec<f64>,
}

impl QpProblem {
    pub fn new(u_nom: StateVector, rows: Vec<QpRow>, lb: StateVector, ub: StateVector) -> Result<Self, QpError> {
        let p = Self { u_nom, rows, lb, ub };
        p.validate()?;
        Ok(p)
    }

    /// `±limit` box around the origin.
    pub fn with_limits(u_nom: StateVector, rows: Vec<QpRow>, limit: &StateVector) -> Result<Self, QpError> {
        Self::new(u_nom, rows, -limit, *limit)
    }

    pub fn validate(&self) -> Result<(), QpError> {
        let finite = |v: &StateVector| v.iter().all(|x| x.is_finite());
        if !finite(&self.u_nom) {
            return Err(QpError::Invalid("non-finite u_nom".into()));
        }
        for (k, r) in self.rows.iter().enumerate() {
            if !finite(&r.a) || !r.b.is_finite() {
                return Err(QpError::Invalid(format!("row {k} is not finite")));
            }
        }
        for i in 0..STATE_DIM {
            if self.lb[i].is_nan() || self.ub[i].is_nan() || self.lb[i] > self.ub[i] {
                return Err(QpError::Invalid(format!("bounds on u[{i}]: lb = {} > ub = {}", self.lb[i], self.ub[i])));
            }
        }
        Ok(())
    }

    pub fn max_iterations(&self) -> usize {
        10 * (self.rows.len() + 2 * STATE_DIM) + 100
    }

    /// Stacks safety rows, then finite lower bounds, then finite upper bounds.
    fn stacked(&self) -> (DMatrix<f64>, DVector<f64>) {
        let mut a_rows: Vec<DVector<f64>> = Vec::new();
        let mut b = Vec::new();
        for r in &self.rows {
            a_rows.push(DVector::from_column_slice(r.a.as_slice()));
            b.push(r.b);
        }
        for (sign, bound) in [(1.0, &self.lb), (-1.0, &self.ub)] {
            for i in 0..STATE_DIM {
                if bound[i].is_finite() {
                    let mut e = DVector::zeros(STATE_DIM);
                    e[i] = sign;
                    a_rows.push(e);
                    b.push(sign * bound[i]);
                }
            }
        }
        let a = DMatrix::from_fn(a_rows.len(), STATE_DIM, |i, j| a_rows[i][j]);
        (a, DVector::from_vec(b))
    }

    pub fn to_json(&self) -> Result<String, QpError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, QpError> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    /// Writes the problem as JSON via a temporary file and rename.
    pub fn dump(&self, path: impl AsRef<Path>) -> Result<(), QpError> {
        crate::io::write_atomic(path.as_ref(), self.to_json()?.as_bytes())?;
        Ok(())
    }
}

fn to_state(v: &DVector<f64>) -> StateVector {
    StateVector::from_column_slice(&v.as_slice()[..STATE_DIM])
}

fn failed(iterations: usize) -> QpSolution {
    QpSolution {
        u: StateVector::zeros(),
        status: QpStatus::Failed,
        slack: 0.0,
        kkt_residual: f64::INFINITY,
        iterations,
        multipliers: Vec::new(),
    }
}

fn row_multipliers(p: &QpProblem, lambda: &DVector<f64>) -> Vec<f64> {
    lambda.iter().take(p.rows.len()).copied().collect()
}

/// Solves the problem; infeasible safety rows are relaxed by their minimal
/// least-squares violation with the box kept hard.
pub fn solve(p: &QpProblem) -> QpSolution {
    if p.validate().is_err() {
        return failed(0);
    }
    let (a, b) = p.stacked();
    let u0 = DVector::from_column_slice(p.u_nom.as_slice());
    let cap = p.max_iterations();
    match project(&u0, &a, &b, cap) {
        Ok(sol) => {
            let u = to_state(&sol.u);
            QpSolution {
                u,
                status: QpStatus::Optimal,
                slack: 0.0,
                kkt_residual: check_kkt(p, &u),
                iterations: sol.iterations,
                multipliers: row_multipliers(p, &sol.lambda),
            }
        }
        Err(ProjectError::IterationCap) => failed(cap),
        Err(ProjectError::Infeasible) => solve_relaxed(p, cap),
    }
}

/// Phase 1: `min ½‖σ‖² + ½δ‖u − u_nom‖²` with `a_k·u + σ_k ≥ b_k`, posed as
/// a projection in `w = (√δ (u − u_nom), σ)`. Phase 2: the original problem
/// with each row lowered by its phase-1 violation.
fn solve_relaxed(p: &QpProblem, cap: usize) -> QpSolution {
    let n = STATE_DIM;
    let m = p.rows.len();
    let s = RELAX_DEVIATION_WEIGHT.sqrt();
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for (k, r) in p.rows.iter().enumerate() {
        let mut a = DVector::zeros(n + m);
        for i in 0..n {
            a[i] = r.a[i] / s;
        }
        a[n + k] = 1.0;
        rows.push((a, r.b - r.a.dot(&p.u_nom)));
    }
    for (sign, bound) in [(1.0, &p.lb), (-1.0, &p.ub)] {
        for i in 0..n {
            if bound[i].is_finite() {
                let mut a = DVector::zeros(n + m);
                a[i] = sign / s;
                rows.push((a, sign * (bound[i] - p.u_nom[i])));
            }
        }
    }
    let a1 = DMatrix::from_fn(rows.len(), n + m, |i, j| rows[i].0[j]);
    let b1 = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let phase1 = match project(&DVector::zeros(n + m), &a1, &b1, 10 * rows.len() + 100) {
        Ok(sol) => sol,
        Err(_) => return failed(cap),
    };
    let u1 = p.u_nom + to_state(&phase1.u) / s;
    let sigma: Vec<f64> = p.rows.iter().map(|r| (r.b - r.a.dot(&u1)).max(0.0)).collect();
    let relaxed = QpProblem {
        rows: p.rows.iter().zip(&sigma).map(|(r, &sg)| QpRow { a: r.a, b: r.b - sg }).collect(),
        ..p.clone()
    };
    let (a2, b2) = relaxed.stacked();
    let iterations = phase1.iterations;
    match project(&DVector::from_column_slice(p.u_nom.as_slice()), &a2, &b2, cap) {
        Ok(sol) => {
            let u = to_state(&sol.u);
            let slack = p.rows.iter().map(|r| (r.b - r.a.dot(&u)).max(0.0)).sum();
            QpSolution {
                u,
                status: QpStatus::Relaxed,
                slack,
                kkt_residual: check_kkt(&relaxed, &u),
                iterations: iterations + sol.iterations,
                multipliers: row_multipliers(p, &sol.lambda),
            }
        }
        Err(_) => {
            // Phase 1 point is feasible for the relaxed rows by construction.
            let slack = sigma.iter().sum();
            QpSolution {
                u: u1,
                status: QpStatus::Relaxed,
                slack,
                kkt_residual: check_kkt(&relaxed, &u1),
                iterations: iterations + cap,
                multipliers: vec![0.0; p.rows.len()],
            }
        }
    }
}

/// Largest of the primal infeasibility, the stationarity residual with
/// non-negative multipliers fitted on the active rows, and the
/// complementarity residual.
pub fn check_kkt(p: &QpProblem, u: &StateVector) -> f64 {
    let (a, b) = p.stacked();
    let uu = DVector::from_column_slice(u.as_slice());
    let slack = &a * &uu - &b;
    let primal = slack.iter().fold(0.0_f64, |m, &s| m.max(-s));
    let active: Vec<usize> = (0..slack.len()).filter(|&i| slack[i] <= ACTIVE_TOL).collect();
    let grad = DVector::from_column_slice((u - p.u_nom).as_slice());
    let (stationarity, complementarity) = if active.is_empty() {
        (grad.amax(), 0.0)
    } else {
        let n = DMatrix::from_columns(&active.iter().map(|&i| a.row(i).transpose()).collect::<Vec<_>>());
        let lam = nnls(&n, &grad);
        let resid = (&grad - &n * &lam).amax();
        let comp = active.iter().zip(lam.iter()).fold(0.0_f64, |m, (&i, &l)| m.max(l * slack[i].abs()));
        (resid, comp)
    };
    primal.max(stationarity).max(complementarity)
}
