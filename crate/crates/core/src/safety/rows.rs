use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{Mode, Obstacle, RdcbfParams, SafetyError};
use crate::geometry::{sqdist, sqdist_gradient, translation_gradient, Primitive, Segment3};
use crate::robot::{
    forward_kinematics, link_jacobians, prediction_jacobians, EndpointJacobian, KinematicModel, RobotState, StateVector,
};

/// A link capsule at its predicted pose, with the total derivative of the
/// predicted endpoints with respect to the state.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub segment: Segment3,
    pub radius: f64,
    pub jac: [EndpointJacobian; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyValue {
    pub h: f64,
    pub dh_dx: StateVector,
    pub dh_dp: Vector3<f64>,
}

/// Measured obstacle velocity and its error bound as seen by the planner.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObstacleMotion {
    pub v_hat: Vector3<f64>,
    pub eps_v: f64,
}

impl ObstacleMotion {
    pub fn of(o: &Obstacle) -> Self {
        Self { v_hat: o.velocity_measured, eps_v: o.eps_v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowSource {
    Obstacle { link: usize, obstacle: usize, part: usize },
    SelfPair { i: usize, j: usize },
    Boundary { face: usize },
}

impl std::fmt::Display for RowSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowSource::Obstacle { link, obstacle, part } => write!(f, "link{link}/obs{obstacle}.{part}"),
            RowSource::SelfPair { i, j } => write!(f, "self{i}-{j}"),
            RowSource::Boundary { face } => write!(f, "boundary{face}"),
        }
    }
}

/// `a·u ≥ b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintRow {
    pub a: StateVector,
    pub b: f64,
    pub h: f64,
    pub source: RowSource,
    pub mode: Mode,
}

/// Axis-aligned box the base footprint must stay inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PruneStats {
    pub kept: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SafetyReport {
    pub min_h: f64,
    pub active_rows: usize,
    pub total_rows: usize,
    pub violated: bool,
}

/// Advances both endpoints by `J · (T ẋ_prev)`.
pub fn predict_link(link: &Segment3, jac: &[EndpointJacobian; 2], xdot_prev: &StateVector, period: f64) -> Segment3 {
    let w = xdot_prev * period;
    Segment3::new(link.p0 + jac[0] * w, link.p1 + jac[1] * w)
}

/// Every link at `x + T ẋ_prev` (first order), with exact state gradients of
/// the predicted endpoints.
pub fn predicted_links(model: &KinematicModel, state: &RobotState, xdot_prev: &StateVector, period: f64) -> Vec<LinkState> {
    let geom = forward_kinematics(model, state);
    let jac = link_jacobians(model, state);
    let w = xdot_prev * period;
    let moving = w.iter().any(|&v| v != 0.0);
    let djac = moving.then(|| prediction_jacobians(model, state, &w));
    geom.segments
        .iter()
        .zip(&geom.radii)
        .enumerate()
        .map(|(i, (seg, &radius))| {
            let j = jac.endpoints[i];
            let total = match &djac {
                Some(d) => [j[0] + d.endpoints[i][0], j[1] + d.endpoints[i][1]],
                None => j,
            };
            LinkState { segment: predict_link(seg, &j, xdot_prev, period), radius, jac: total }
        })
        .collect()
}

fn chain(link: &LinkState, grads: &[Vector3<f64>]) -> StateVector {
    link.jac[0].transpose() * grads[0] + link.jac[1].transpose() * grads[1]
}

/// `h` and its gradients for one link against one obstacle part advanced by `T·v̂`.
pub fn safety_value(link: &LinkState, obstacle: &Obstacle, part: usize, period: f64) -> SafetyValue {
    let p = &obstacle.parts()[part];
    let other = p.primitive.translated(&(obstacle.velocity_measured * period));
    let seg = Primitive::Segment(link.segment);
    let res = sqdist(&seg, &other);
    let r = link.radius + p.radius + obstacle.margin;
    SafetyValue {
        h: res.d2 - r * r,
        dh_dx: chain(link, &sqdist_gradient(&seg, &res)),
        dh_dp: translation_gradient(&res).1,
    }
}

/// Row `a·u ≥ b` with `a = ∂h/∂x` and `b = −φ` for `mode`.
pub fn build_row(
    value: &SafetyValue,
    d_hat: &StateVector,
    motion: &ObstacleMotion,
    params: &RdcbfParams,
    mode: Mode,
    source: RowSource,
) -> Result<ConstraintRow, SafetyError> {
    let denom = params.chi_denominator();
    if !(denom > 0.0) {
        return Err(SafetyError::Hypothesis(
            "alpha > (gamma+mu)/2",
            format!("4*alpha - 2*mu - 2*gamma = {denom}"),
        ));
    }
    let mut phi = params.gamma * value.h;
    if mode.uses_obstacle_velocity() {
        let mut transport = value.dh_dp.dot(&motion.v_hat);
        if mode.compensates_velocity_error() {
            transport -= value.dh_dp.lp_norm(1) * motion.eps_v;
        }
        phi += transport;
    }
    if mode.compensates_disturbance() {
        let mut comp = value.dh_dx.dot(d_hat);
        if !params.disturbance_free() {
            let chi = params.beta * value.dh_dx.norm_squared() / denom;
            comp -= params.omega1 * params.omega1 / (2.0 * params.mu * params.beta) + chi;
        }
        phi += comp;
    }
    Ok(ConstraintRow { a: value.dh_dx, b: -phi, h: value.h, source, mode })
}

fn keep_row(row: ConstraintRow) -> Option<ConstraintRow> {
    if row.a.iter().all(|&v| v == 0.0) {
        let level = if row.h < 0.0 { log::Level::Warn } else { log::Level::Debug };
        log::log!(level, "dropping row {} with zero gradient (h = {}, b = {})", row.source, row.h, row.b);
        None
    } else {
        Some(row)
    }
}

/// Rows for every (link, obstacle part), ordered by source.
pub fn obstacle_rows(
    links: &[LinkState],
    obstacles: &[Obstacle],
    d_hat: &StateVector,
    params: &RdcbfParams,
    mode: Mode,
) -> Result<Vec<ConstraintRow>, SafetyError> {
    let mut rows = Vec::with_capacity(links.len() * obstacles.len());
    for (i, link) in links.iter().enumerate() {
        for (j, obs) in obstacles.iter().enumerate() {
            let motion = ObstacleMotion::of(obs);
            for k in 0..obs.parts().len() {
                let v = safety_value(link, obs, k, params.period);
                let source = RowSource::Obstacle { link: i, obstacle: j, part: k };
                rows.extend(keep_row(build_row(&v, d_hat, &motion, params, mode, source)?));
            }
        }
    }
    Ok(rows)
}

/// Rows keeping non-adjacent link pairs apart by the sum of their radii.
pub fn self_collision_rows(
    links: &[LinkState],
    pairs: &[(usize, usize)],
    d_hat: &StateVector,
    params: &RdcbfParams,
    mode: Mode,
) -> Result<Vec<ConstraintRow>, SafetyError> {
    let mut rows = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        let (li, lj) = (&links[i], &links[j]);
        let (si, sj) = (Primitive::Segment(li.segment), Primitive::Segment(lj.segment));
        let res = sqdist(&si, &sj);
        let r = li.radius + lj.radius;
        let value = SafetyValue {
            h: res.d2 - r * r,
            dh_dx: chain(li, &sqdist_gradient(&si, &res)) + chain(lj, &sqdist_gradient(&sj, &res.swapped())),
            dh_dp: Vector3::zeros(),
        };
        let row = build_row(&value, d_hat, &ObstacleMotion::default(), params, mode, RowSource::SelfPair { i, j })?;
        rows.extend(keep_row(row));
    }
    Ok(rows)
}

fn boundary_values(base: [f64; 2], footprint: f64, ws: &Workspace) -> [(f64, usize, f64); 4] {
    // (h, state index, gradient sign) for faces -x, +x, -y, +y.
    [
        (base[0] - ws.min[0] - footprint, 0, 1.0),
        (ws.max[0] - base[0] - footprint, 0, -1.0),
        (base[1] - ws.min[1] - footprint, 1, 1.0),
        (ws.max[1] - base[1] - footprint, 1, -1.0),
    ]
}

/// Linear signed margins of the base footprint to each workspace face.
pub fn boundary_rows(
    state: &RobotState,
    footprint: f64,
    workspace: Option<&Workspace>,
    d_hat: &StateVector,
    params: &RdcbfParams,
    mode: Mode,
) -> Result<Vec<ConstraintRow>, SafetyError> {
    let Some(ws) = workspace else {
        return Ok(Vec::new());
    };
    let b = state.base();
    boundary_values([b.x, b.y], footprint, ws)
        .into_iter()
        .enumerate()
        .map(|(face, (h, idx, sign))| {
            let mut dh_dx = StateVector::zeros();
            dh_dx[idx] = sign;
            let value = SafetyValue { h, dh_dx, dh_dp: Vector3::zeros() };
            build_row(&value, d_hat, &ObstacleMotion::default(), params, mode, RowSource::Boundary { face })
        })
        .collect()
}

/// Keeps rows with `h ≤ activation_h`, and always those with `h < 0`.
pub fn prune_rows(rows: Vec<ConstraintRow>, activation_h: f64) -> (Vec<ConstraintRow>, PruneStats) {
    let total = rows.len();
    let kept: Vec<_> = rows.into_iter().filter(|r| r.h <= activation_h || r.h < 0.0).collect();
    let stats = PruneStats { kept: kept.len(), total };
    (kept, stats)
}

pub fn safety_report(min_h: f64, stats: PruneStats) -> SafetyReport {
    SafetyReport { min_h, active_rows: stats.kept, total_rows: stats.total, violated: min_h < 0.0 }
}

/// Minimum safety value of the actual configuration, without prediction.
pub fn true_min_h(
    model: &KinematicModel,
    state: &RobotState,
    obstacles: &[Obstacle],
    pairs: &[(usize, usize)],
    workspace: Option<&Workspace>,
) -> f64 {
    let geom = forward_kinematics(model, state);
    let mut min_h = f64::INFINITY;
    for (seg, &r) in geom.segments.iter().zip(&geom.radii) {
        let s = Primitive::Segment(*seg);
        for obs in obstacles {
            for p in obs.parts() {
                let rr = r + p.radius + obs.margin;
                min_h = min_h.min(sqdist(&s, &p.primitive).d2 - rr * rr);
            }
        }
    }
    for &(i, j) in pairs {
        let rr = geom.radii[i] + geom.radii[j];
        let d2 = sqdist(&Primitive::Segment(geom.segments[i]), &Primitive::Segment(geom.segments[j])).d2;
        min_h = min_h.min(d2 - rr * rr);
    }
    if let Some(ws) = workspace {
        let b = state.base();
        for (h, _, _) in boundary_values([b.x, b.y], model.base.footprint_radius, ws) {
            min_h = min_h.min(h);
        }
    }
    min_h
}

/// One line per row: source, mode, h, b, a[0..8].
pub fn write_rows_csv<W: Write>(rows: &[ConstraintRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "source,mode,h,b,a0,a1,a2,a3,a4,a5,a6,a7")?;
    for r in rows {
        write!(w, "{},{},{:e},{:e}", r.source, r.mode, r.h, r.b)?;
        for v in r.a.iter() {
            write!(w, ",{v:e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::safety::Shape;

    fn params() -> RdcbfParams {
        RdcbfParams { gamma: 2.0, alpha: 4.0, mu: 2.0, beta: 10.0, period: 0.1, omega0: 0.0, omega1: 0.0 }
    }

    fn value(h: f64, dh_dx: StateVector) -> SafetyValue {
        SafetyValue { h, dh_dx, dh_dp: Vector3::zeros() }
    }

    const SRC: RowSource = RowSource::Boundary { face: 0 };

    #[test]
    fn cbf_row_example() {
        let e1 = StateVector::from_fn(|i, _| if i == 0 { 1.0 } else { 0.0 });
        let row = build_row(&value(1.0, e1), &StateVector::zeros(), &ObstacleMotion::default(), &params(), Mode::Cbf, SRC)
            .unwrap();
        assert_eq!(row.a, e1);
        assert_eq!(row.b, -2.0);
    }

    #[test]
    fn chi_example() {
        // gamma = 1, alpha = 4, mu = 2, beta = 10, |dh/dx| = 1: chi = 10 / (16 - 4 - 2) = 1.
        let p = RdcbfParams { gamma: 1.0, omega0: 0.1, ..params() };
        let e1 = StateVector::from_fn(|i, _| if i == 0 { 1.0 } else { 0.0 });
        let r1 = build_row(&value(0.0, e1), &StateVector::zeros(), &ObstacleMotion::default(), &p, Mode::R1cbf, SRC).unwrap();
        let d = build_row(&value(0.0, e1), &StateVector::zeros(), &ObstacleMotion::default(), &p, Mode::Dcbf, SRC).unwrap();
        assert!((r1.b - d.b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_positive_denominator() {
        let p = RdcbfParams { alpha: 2.0, ..params() };
        let e = build_row(&value(1.0, StateVector::zeros()), &StateVector::zeros(), &ObstacleMotion::default(), &p, Mode::Rdcbf, SRC);
        assert!(e.unwrap_err().to_string().contains("alpha > (gamma+mu)/2"));
    }

    #[test]
    fn prediction_examples() {
        let model = KinematicModel::default_model();
        let s = RobotState::zero();
        let still = predicted_links(&model, &s, &StateVector::zeros(), 0.1);
        let geom = forward_kinematics(&model, &s);
        for (l, g) in still.iter().zip(&geom.segments) {
            assert_eq!(l.segment, *g);
        }
        let mut v = StateVector::zeros();
        v[0] = 1.0;
        for (l, g) in predicted_links(&model, &s, &v, 0.1).iter().zip(&geom.segments) {
            assert!((l.segment.p0 - g.p0 - Vector3::new(0.1, 0.0, 0.0)).norm() < 1e-15);
            assert!((l.segment.p1 - g.p1 - Vector3::new(0.1, 0.0, 0.0)).norm() < 1e-15);
        }
    }

    fn lone_link() -> LinkState {
        LinkState {
            segment: Segment3::new(Vector3::new(-1.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0)),
            radius: 0.5,
            jac: [EndpointJacobian::zeros(); 2],
        }
    }

    #[test]
    fn safety_value_examples() {
        let sphere = |z: f64| {
            let shape = Shape::Sphere { center: Vector3::new(0.0, 0.0, z), radius: 0.25 };
            Obstacle::new("s", shape, Vector3::zeros(), Vector3::zeros(), 0.0, 0.25).unwrap()
        };
        // D* = 4, R = 1.
        assert_eq!(safety_value(&lone_link(), &sphere(2.0), 0, 0.1).h, 3.0);
        assert_eq!(safety_value(&lone_link(), &sphere(1.0), 0, 0.1).h, 0.0);
    }

    #[test]
    fn boundary_examples() {
        let ws = Workspace { min: [-5.0, -5.0], max: [5.0, 5.0] };
        let p = RdcbfParams { gamma: 1.0, ..params() };
        let d0 = StateVector::zeros();
        let rows = boundary_rows(&RobotState::zero(), 0.3, Some(&ws), &d0, &p, Mode::Cbf).unwrap();
        assert!(rows.iter().all(|r| r.h > 0.0));
        assert!(boundary_rows(&RobotState::zero(), 0.3, None, &d0, &p, Mode::Cbf).unwrap().is_empty());
        let near = RobotState::from_slice(&[4.6, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let rows = boundary_rows(&near, 0.3, Some(&ws), &d0, &p, Mode::Cbf).unwrap();
        // -u_x >= -0.1  <=>  u_x <= 0.1
        let plus_x = rows[1];
        assert!((plus_x.h - 0.1).abs() < 1e-12);
        assert_eq!(plus_x.a[0], -1.0);
        assert!((plus_x.b + 0.1).abs() < 1e-12);
    }

    #[test]
    fn prune_examples() {
        let mk = |h: f64| ConstraintRow { a: StateVector::zeros(), b: 0.0, h, source: SRC, mode: Mode::Cbf };
        let rows: Vec<_> = [5.0, -0.2, 0.5, 1.0, 1.5].into_iter().map(mk).collect();
        let (kept, stats) = prune_rows(rows.clone(), 1.0);
        assert_eq!(kept.iter().map(|r| r.h).collect::<Vec<_>>(), vec![-0.2, 0.5, 1.0]);
        assert_eq!(stats, PruneStats { kept: 3, total: 5 });
        assert_eq!(prune_rows(rows.clone(), f64::INFINITY).0, rows);
        let (none, _) = prune_rows(vec![mk(1e9), mk(1e6)], 1.0);
        assert!(none.is_empty());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let row = ConstraintRow { a: StateVector::zeros(), b: 1.5, h: 0.25, source: SRC, mode: Mode::Rdcbf };
        let mut out = Vec::new();
        write_rows_csv(&[row, row], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("boundary0,rdcbf,"));
    }
}
