use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::io::write_atomic;
use crate::qp::QpStatus;
use crate::robot::STATE_DIM;
use crate::safety::{Mode, RdcbfParams};

/// One planner cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: [f64; STATE_DIM],
    pub u_nom: [f64; STATE_DIM],
    pub u_safe: [f64; STATE_DIM],
    pub d: [f64; STATE_DIM],
    pub d_hat: [f64; STATE_DIM],
    pub min_h: f64,
    pub active_rows: usize,
    pub total_rows: usize,
    pub status: QpStatus,
}

/// Wall-clock planner cost; hardware-dependent and excluded from
/// determinism comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub mean_plan_seconds: f64,
    pub mean_frequency_hz: f64,
}

/// Parameters actually used by a run, after overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConfig {
    pub params: RdcbfParams,
    pub activation_h: f64,
    pub dt: f64,
    pub duration: f64,
    pub e0: f64,
    pub velocity_scale: f64,
    pub disturbance: bool,
    pub phase: [f64; STATE_DIM],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    /// Final goal reached within the cap and `min_h ≥ 0` throughout.
    pub success: bool,
    pub reached_goal: bool,
    /// Arc length of the base path, meters.
    pub trajectory_length: f64,
    pub total_time: f64,
    pub min_h: f64,
    pub h0: f64,
    pub cycles: usize,
    pub optimal_cycles: usize,
    pub relaxed_cycles: usize,
    pub failed_cycles: usize,
    pub all_optimal: bool,
    pub mean_active_rows: f64,
    pub mean_total_rows: f64,
    pub max_observer_error: f64,
    pub timing: Timing,
    pub config: EffectiveConfig,
}

impl Summary {
    pub fn without_timing(&self) -> Summary {
        Summary { timing: Timing::default(), ..self.clone() }
    }

    pub fn violated(&self) -> bool {
        self.min_h < 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub samples: Vec<Sample>,
    pub summary: Summary,
}

impl RunRecord {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let names = |p: &str| (0..STATE_DIM).map(|i| format!("{p}{i}")).collect::<Vec<_>>().join(",");
        writeln!(
            w,
            "t,{},{},{},{},{},min_h,active_rows,total_rows,status",
            names("x"),
            names("u_nom"),
            names("u_safe"),
            names("d"),
            names("d_hat")
        )?;
        for s in &self.samples {
            write!(w, "{}", s.t)?;
            for v in [&s.state, &s.u_nom, &s.u_safe, &s.d, &s.d_hat] {
                for x in v {
                    write!(w, ",{x}")?;
                }
            }
            let status = serde_json::to_value(s.status).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
            writeln!(w, ",{},{},{},{status}", s.min_h, s.active_rows, s.total_rows)?;
        }
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json` (the summary) into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(), SimError> {
        let mut csv = Vec::new();
        self.write_csv(&mut csv).expect("writing to memory");
        let csv_path = dir.join(format!("{stem}.csv"));
        write_atomic(&csv_path, &csv).map_err(|e| SimError::Io { file: csv_path, source: e })?;
        let json = serde_json::to_vec_pretty(&self.summary).expect("summary serializes");
        let json_path = dir.join(format!("{stem}.json"));
        write_atomic(&json_path, &json).map_err(|e| SimError::Io { file: json_path, source: e })
    }
}
