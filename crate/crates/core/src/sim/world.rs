use std::path::PathBuf;
use std::time::Instant;

use log::{debug, warn};
use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::controller::nominal_controller;
use super::disturbance::{DisturbanceProfile, VelocityCorruption};
use super::record::{EffectiveConfig, RunRecord, Sample, Summary, Timing};
use super::scenario::Scenario;
use super::script::ScriptedObstacle;
use super::SimError;
use crate::observer::{dob_init, dob_update, DobState};
use crate::qp::{solve, QpProblem, QpRow, QpStatus};
use crate::robot::{KinematicModel, RobotState, StateVector, JOINT_COUNT};
use crate::safety::{
    boundary_rows, obstacle_rows, predicted_links, prune_rows, self_collision_rows, true_min_h, write_rows_csv, Mode,
    Obstacle, RdcbfParams,
};

/// Command-line style overrides; `None` keeps the scenario value.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub mu: Option<f64>,
    pub period: Option<f64>,
    pub activation_h: Option<f64>,
    pub duration: Option<f64>,
    pub e0: Option<f64>,
    pub velocity_scale: Option<f64>,
    /// Forces the disturbance on or off.
    pub disturbance: Option<bool>,
    /// Keep the per-cycle time series.
    pub keep_series: bool,
    /// Dump QP problems and rows of every non-optimal cycle here.
    pub debug_dir: Option<PathBuf>,
}

/// Simulation state between physics ticks.
pub struct World {
    scenario: Scenario,
    model: KinematicModel,
    mode: Mode,
    seed: u64,
    params: RdcbfParams,
    activation_h: f64,
    e0: f64,
    pairs: Vec<(usize, usize)>,
    limits: StateVector,
    dt: f64,
    ticks_per_plan: u64,
    duration_ticks: u64,
    keep_series: bool,
    debug_dir: Option<PathBuf>,

    state: RobotState,
    lifted: StateVector,
    dob: DobState,
    scripts: Vec<ScriptedObstacle>,
    disturbance: DisturbanceProfile,
    tick: u64,
    u_hold: StateVector,
    goal: usize,
    arrived_at: Option<f64>,
    finished: bool,
    reached_goal: bool,

    samples: Vec<Sample>,
    h0: f64,
    min_h: f64,
    length: f64,
    cycles: usize,
    status_counts: [usize; 3],
    active_sum: usize,
    total_sum: usize,
    plan_seconds: f64,
    max_observer_error: f64,
}

fn config(field: &str, msg: String) -> SimError {
    SimError::Config { field: field.to_string(), msg }
}

impl World {
    pub fn new(scenario: &Scenario, mode: Mode, o: &RunOverrides) -> Result<Self, SimError> {
        let mut sc = scenario.clone();
        if let Some(dt) = o.dt {
            sc.dt = dt;
        }
        if let Some(d) = o.duration {
            sc.duration = d;
        }
        if let Some(s) = o.velocity_scale {
            sc.velocity_scale = s;
        }
        if let Some(p) = o.period {
            sc.planner.period = p;
        }
        if let Some(a) = o.activation_h {
            sc.planner.activation_h = a;
        }
        sc.validate()?;
        let seed = o.seed.unwrap_or(sc.seed);
        let model = sc.load_model()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let use_disturbance = o.disturbance.unwrap_or(true);
        let profile = sc.disturbance.profile(&mut rng);
        let disturbance = if use_disturbance { profile } else { DisturbanceProfile::none() };

        let mut joints = sc.start.joints;
        if sc.jitter.joints > 0.0 {
            for q in joints.iter_mut() {
                *q += rng.random_range(-sc.jitter.joints..=sc.jitter.joints);
            }
        }
        let state = RobotState::new(Vector2::from(sc.start.base), joints)?;

        let corruption = VelocityCorruption { scale: sc.velocity_scale };
        let mut scripts = Vec::with_capacity(sc.obstacles.len());
        for spec in &sc.obstacles {
            let (mut delay, legs, cycle) = spec.motion.legs().map_err(|m| config("obstacles.motion", m))?;
            if !legs.is_empty() && sc.jitter.obstacle_delay > 0.0 {
                delay += rng.random_range(0.0..=sc.jitter.obstacle_delay);
            }
            let eps_v = corruption.eps_v(Scenario::max_script_speed(spec));
            let margin = spec.margin.unwrap_or(sc.margin);
            let obstacle = Obstacle::new(spec.id.clone(), spec.shape.build()?, Vector3::zeros(), Vector3::zeros(), eps_v, margin)?;
            scripts.push(ScriptedObstacle { obstacle, delay, legs, cycle, corruption });
        }
        for s in &mut scripts {
            s.sense(0.0)?;
        }

        let p = &sc.planner;
        let alpha = o.alpha.unwrap_or(p.alpha);
        let params = RdcbfParams {
            gamma: o.gamma.unwrap_or(p.gamma),
            alpha,
            mu: o.mu.or(p.mu).unwrap_or(alpha),
            beta: o.beta.unwrap_or(p.beta),
            period: p.period,
            omega0: disturbance.omega0(),
            omega1: disturbance.omega1(),
        };
        let pairs = model.self_collision_pairs();
        let obstacles: Vec<Obstacle> = scripts.iter().map(|s| s.obstacle.clone()).collect();
        let h0 = true_min_h(&model, &state, &obstacles, &pairs, sc.workspace.as_ref());
        let e0 = o.e0.or(p.e0).unwrap_or(params.omega0);
        params.validate_initial(h0, e0)?;

        let limits = StateVector::from_fn(|i, _| if i < 2 { sc.limits.base } else { sc.limits.joint });
        let ticks_per_plan = ((p.period / sc.dt).round() as u64).max(1);
        let duration_ticks = (sc.duration / sc.dt).round() as u64;
        let dob = dob_init(&state, params.alpha)?;
        Ok(Self {
            activation_h: p.activation_h,
            model,
            mode,
            seed,
            params,
            e0,
            pairs,
            limits,
            dt: sc.dt,
            ticks_per_plan,
            duration_ticks,
            keep_series: o.keep_series,
            debug_dir: o.debug_dir.clone(),
            lifted: state.to_vector(),
            state,
            dob,
            scripts,
            disturbance,
            tick: 0,
            u_hold: StateVector::zeros(),
            goal: 0,
            arrived_at: None,
            finished: false,
            reached_goal: false,
            samples: Vec::new(),
            h0,
            min_h: h0,
            length: 0.0,
            cycles: 0,
            status_counts: [0; 3],
            active_sum: 0,
            total_sum: 0,
            plan_seconds: 0.0,
            max_observer_error: 0.0,
            scenario: sc,
        })
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    pub fn observer(&self) -> &DobState {
        &self.dob
    }

    pub fn params(&self) -> &RdcbfParams {
        &self.params
    }

    pub fn obstacles(&self) -> Vec<Obstacle> {
        self.scripts.iter().map(|s| s.obstacle.clone()).collect()
    }

    pub fn model(&self) -> &KinematicModel {
        &self.model
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    /// Final goal reached or duration cap hit.
    pub fn finished(&self) -> bool {
        self.finished || self.tick >= self.duration_ticks
    }

    /// One physics tick, planning first when a control period starts.
    pub fn step(&mut self) -> Result<(), SimError> {
        if self.finished() {
            return Ok(());
        }
        let t = self.time();
        for s in &mut self.scripts {
            s.sense(t)?;
        }
        if self.tick % self.ticks_per_plan == 0 {
            self.plan(t)?;
            if self.finished {
                return Ok(());
            }
        }
        let d = self.disturbance.at(t);
        let before = self.lifted;
        self.lifted += (self.u_hold + d) * self.dt;
        self.length += (self.lifted.fixed_rows::<2>(0) - before.fixed_rows::<2>(0)).norm();
        self.state = RobotState::from_vector(&self.lifted)?;
        for s in &mut self.scripts {
            s.advance(self.dt);
        }
        self.dob = dob_update(&self.dob, &self.state, &self.u_hold, self.dt)?;
        self.tick += 1;
        let err = (self.disturbance.at(self.time()) - self.dob.d_hat).norm();
        self.max_observer_error = self.max_observer_error.max(err);
        Ok(())
    }

    fn current_goal(&mut self, t: f64) -> Vector2<f64> {
        let tol = self.scenario.controller.goal_tolerance;
        let last = self.scenario.goals.len() - 1;
        let g = &self.scenario.goals[self.goal];
        let target = Vector2::from(g.position);
        if (self.state.base() - target).norm() <= tol {
            if self.goal == last {
                self.reached_goal = true;
                self.finished = true;
            } else {
                let since = *self.arrived_at.get_or_insert(t);
                if t - since >= g.pause {
                    self.goal += 1;
                    self.arrived_at = None;
                }
            }
        }
        Vector2::from(self.scenario.goals[self.goal].position)
    }

    fn plan(&mut self, t: f64) -> Result<(), SimError> {
        let obstacles = self.obstacles();
        let h = true_min_h(&self.model, &self.state, &obstacles, &self.pairs, self.scenario.workspace.as_ref());
        self.min_h = self.min_h.min(h);
        let goal = self.current_goal(t);
        if self.finished {
            return Ok(());
        }
        let u_nom = nominal_controller(&self.state, &goal, &self.scenario.controller);

        let start = Instant::now();
        let (p, d_hat, mode) = (&self.params, &self.dob.d_hat, self.mode);
        let links = predicted_links(&self.model, &self.state, &self.u_hold, p.period);
        let mut rows = obstacle_rows(&links, &obstacles, d_hat, p, mode)?;
        rows.extend(self_collision_rows(&links, &self.pairs, d_hat, p, mode)?);
        let footprint = self.model.base.footprint_radius;
        rows.extend(boundary_rows(&self.state, footprint, self.scenario.workspace.as_ref(), d_hat, p, mode)?);
        let (rows, stats) = prune_rows(rows, self.activation_h);
        let qp_rows = rows.iter().map(|r| QpRow { a: r.a, b: r.b }).collect();
        let problem = QpProblem::with_limits(u_nom, qp_rows, &self.limits)
            .map_err(|e| config("limits", e.to_string()))?;
        let sol = solve(&problem);
        self.plan_seconds += start.elapsed().as_secs_f64();

        let idx = match sol.status {
            QpStatus::Optimal => 0,
            QpStatus::Relaxed => 1,
            QpStatus::Failed => 2,
        };
        if sol.status != QpStatus::Optimal {
            debug!("t = {t:.3}: QP {:?}, slack {:.3e}", sol.status, sol.slack);
            if let Some(dir) = &self.debug_dir {
                let stem = dir.join(format!("cycle_{:06}", self.cycles));
                if let Err(e) = problem.dump(stem.with_extension("json")) {
                    warn!("QP dump failed: {e}");
                }
                let mut csv = Vec::new();
                write_rows_csv(&rows, &mut csv).expect("writing to memory");
                if let Err(e) = crate::io::write_atomic(&stem.with_extension("csv"), &csv) {
                    warn!("row dump failed: {e}");
                }
            }
        }
        self.status_counts[idx] += 1;
        self.cycles += 1;
        self.active_sum += stats.kept;
        self.total_sum += stats.total;
        self.u_hold = sol.u;
        if self.keep_series {
            self.samples.push(Sample {
                t,
                state: self.state.to_vector().into(),
                u_nom: u_nom.into(),
                u_safe: sol.u.into(),
                d: self.disturbance.at(t).into(),
                d_hat: self.dob.d_hat.into(),
                min_h: h,
                active_rows: stats.kept,
                total_rows: stats.total,
                status: sol.status,
            });
        }
        Ok(())
    }

    /// Closes the run, evaluating the final configuration.
    pub fn finish(mut self) -> RunRecord {
        if self.cycles > 0 && !self.finished {
            let obstacles = self.obstacles();
            let h = true_min_h(&self.model, &self.state, &obstacles, &self.pairs, self.scenario.workspace.as_ref());
            self.min_h = self.min_h.min(h);
            let last = Vector2::from(self.scenario.goals[self.scenario.goals.len() - 1].position);
            if self.goal + 1 == self.scenario.goals.len()
                && (self.state.base() - last).norm() <= self.scenario.controller.goal_tolerance
            {
                self.reached_goal = true;
            }
        }
        let cycles = self.cycles.max(1) as f64;
        let mean_plan = if self.cycles > 0 { self.plan_seconds / self.cycles as f64 } else { 0.0 };
        let phase: [f64; crate::robot::STATE_DIM] = self.disturbance.phase.into();
        let summary = Summary {
            scenario: self.scenario.name.clone(),
            mode: self.mode,
            seed: self.seed,
            success: self.reached_goal && self.min_h >= 0.0,
            reached_goal: self.reached_goal,
            trajectory_length: self.length,
            total_time: self.time(),
            min_h: self.min_h,
            h0: self.h0,
            cycles: self.cycles,
            optimal_cycles: self.status_counts[0],
            relaxed_cycles: self.status_counts[1],
            failed_cycles: self.status_counts[2],
            all_optimal: self.status_counts[1] == 0 && self.status_counts[2] == 0,
            mean_active_rows: self.active_sum as f64 / cycles,
            mean_total_rows: self.total_sum as f64 / cycles,
            max_observer_error: self.max_observer_error,
            timing: Timing {
                mean_plan_seconds: mean_plan,
                mean_frequency_hz: if mean_plan > 0.0 { 1.0 / mean_plan } else { 0.0 },
            },
            config: EffectiveConfig {
                params: self.params,
                activation_h: self.activation_h,
                dt: self.dt,
                duration: self.scenario.duration,
                e0: self.e0,
                velocity_scale: self.scenario.velocity_scale,
                disturbance: self.disturbance.omega0() > 0.0,
                phase,
            },
        };
        RunRecord { samples: self.samples, summary }
    }
}

const _: () = assert!(JOINT_COUNT + 2 == crate::robot::STATE_DIM);

/// Runs until the final goal is reached or the duration cap.
pub fn run(scenario: &Scenario, mode: Mode, overrides: &RunOverrides) -> Result<RunRecord, SimError> {
    let mut world = World::new(scenario, mode, overrides)?;
    while !world.finished() {
        world.step()?;
    }
    Ok(world.finish())
}
