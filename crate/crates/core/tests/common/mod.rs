//! Helpers shared by the integration tests.
//!
//! The distance references here are written from scratch and do not call
//! into the library: a convex quadratic over a box attains its minimum either
//! at an interior stationary point or on a face, and every face reduces to a
//! point-to-convex-set clamp.

#![allow(dead_code)]

use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use rdcbf_core::geometry::{Cuboid, Primitive, Rect3, Segment3};
use rdcbf_core::robot::{forward_kinematics, KinematicModel, RobotState, StateVector};
use rdcbf_core::safety::{predicted_links, safety_value, Obstacle, Shape};

pub type V3 = Vector3<f64>;

pub fn point_segment(p: &V3, a: &V3, b: &V3) -> f64 {
    let d = b - a;
    let n = d.norm_squared();
    let t = if n > 0.0 { ((p - a).dot(&d) / n).clamp(0.0, 1.0) } else { 0.0 };
    (a + d * t - p).norm_squared()
}

pub fn segment_segment(a0: &V3, a1: &V3, b0: &V3, b1: &V3) -> f64 {
    let mut best = point_segment(a0, b0, b1)
        .min(point_segment(a1, b0, b1))
        .min(point_segment(b0, a0, a1))
        .min(point_segment(b1, a0, a1));
    let (u, v, w) = (a1 - a0, b1 - b0, a0 - b0);
    let (uu, uv, vv, uw, vw) = (u.dot(&u), u.dot(&v), v.dot(&v), u.dot(&w), v.dot(&w));
    let det = uu * vv - uv * uv;
    if det > 1e-14 * uu * vv {
        let s = (uv * vw - vv * uw) / det;
        let t = (uu * vw - uv * uw) / det;
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            best = best.min((a0 + u * s - b0 - v * t).norm_squared());
        }
    }
    best
}

/// Rectangle given by a corner and two orthogonal edge vectors.
#[derive(Debug, Clone, Copy)]
pub struct TestRect {
    pub origin: V3,
    pub eu: V3,
    pub ev: V3,
}

impl TestRect {
    pub fn corners(&self) -> [V3; 4] {
        [self.origin, self.origin + self.eu, self.origin + self.eu + self.ev, self.origin + self.ev]
    }

    pub fn point(&self, p: &V3) -> f64 {
        let w = p - self.origin;
        let s = if self.eu.norm_squared() > 0.0 { (w.dot(&self.eu) / self.eu.norm_squared()).clamp(0.0, 1.0) } else { 0.0 };
        let t = if self.ev.norm_squared() > 0.0 { (w.dot(&self.ev) / self.ev.norm_squared()).clamp(0.0, 1.0) } else { 0.0 };
        (self.origin + self.eu * s + self.ev * t - p).norm_squared()
    }

    pub fn segment(&self, a: &V3, b: &V3) -> f64 {
        let c = self.corners();
        let mut best = self.point(a).min(self.point(b));
        for k in 0..4 {
            best = best.min(segment_segment(a, b, &c[k], &c[(k + 1) % 4]));
        }
        if let Some(n) = self.eu.cross(&self.ev).try_normalize(0.0) {
            let (da, db) = ((a - self.origin).dot(&n), (b - self.origin).dot(&n));
            if da * db <= 0.0 && da != db {
                let x = a + (b - a) * (da / (da - db));
                best = best.min(self.point(&x));
            }
        }
        best
    }
}

pub fn random_point<R: Rng>(rng: &mut R, scale: f64) -> V3 {
    V3::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

pub fn random_rotation<R: Rng>(rng: &mut R) -> Rotation3<f64> {
    let axis = random_point(rng, 1.0);
    let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    match nalgebra::Unit::try_new(axis, 1e-6) {
        Some(a) => Rotation3::from_axis_angle(&a, angle),
        None => Rotation3::identity(),
    }
}

pub fn random_test_rect<R: Rng>(rng: &mut R) -> TestRect {
    let rot = random_rotation(rng);
    TestRect {
        origin: random_point(rng, 1.0),
        eu: rot * V3::x() * rng.random_range(0.05..2.0),
        ev: rot * V3::y() * rng.random_range(0.05..2.0),
    }
}

/// Segment pairs mixing generic, parallel, crossing and degenerate cases.
pub fn random_segment_pair<R: Rng>(rng: &mut R) -> [V3; 4] {
    let a0 = random_point(rng, 1.0);
    let a1 = random_point(rng, 1.0);
    match rng.random_range(0..5) {
        0 => {
            let off = random_point(rng, 0.5);
            [a0, a1, a0 + off + (a1 - a0) * rng.random_range(-1.0..1.0), a1 + off]
        }
        1 => {
            let m = (a0 + a1) * 0.5;
            let d = random_point(rng, 1.0);
            [a0, a1, m - d, m + d]
        }
        2 => {
            let p = random_point(rng, 1.0);
            [a0, a1, p, p]
        }
        3 => [a0, a0, a1, random_point(rng, 1.0)],
        _ => [a0, a1, random_point(rng, 1.0), random_point(rng, 1.0)],
    }
}

/// Segment near a rectangle: generic, in-plane, piercing or parallel above it.
pub fn random_segment_near<R: Rng>(rng: &mut R, r: &TestRect) -> [V3; 2] {
    let n = r.eu.cross(&r.ev).normalize();
    let on = |rng: &mut R| r.origin + r.eu * rng.random_range(-0.5..1.5) + r.ev * rng.random_range(-0.5..1.5);
    match rng.random_range(0..5) {
        0 => [on(rng), on(rng)],
        1 => {
            let p = on(rng);
            [p + n * rng.random_range(0.01..1.0), p - n * rng.random_range(0.01..1.0)]
        }
        2 => {
            let h = n * rng.random_range(-0.5..0.5);
            [on(rng) + h, on(rng) + h]
        }
        3 => {
            let p = on(rng) + n * rng.random_range(-0.5..0.5);
            [p, p]
        }
        _ => [random_point(rng, 2.0), random_point(rng, 2.0)],
    }
}

pub const PERIOD: f64 = 0.005;

/// One link of the default arm facing one obstacle part.
pub struct Scene {
    pub model: KinematicModel,
    pub x: StateVector,
    pub xdot_prev: StateVector,
    pub link: usize,
    pub obstacle: Obstacle,
}

pub fn random_state<R: Rng>(rng: &mut R) -> StateVector {
    StateVector::from_fn(|i, _| if i < 2 { rng.random_range(-2.0..2.0) } else { rng.random_range(-2.5..2.5) })
}

pub fn random_velocity<R: Rng>(rng: &mut R, scale: f64) -> StateVector {
    StateVector::from_fn(|_, _| rng.random_range(-scale..scale))
}

pub fn random_scene<R: Rng>(rng: &mut R, model: &KinematicModel) -> Scene {
    let x = random_state(rng);
    let xdot_prev = random_velocity(rng, 1.0);
    let geom = forward_kinematics(model, &RobotState::from_vector(&x).unwrap());
    let link = rng.random_range(0..geom.segments.len());
    let s = geom.segments[link];
    let dir = random_point(rng, 1.0).normalize();
    let anchor = s.point_at(rng.random_range(-0.2..1.2)) + dir * rng.random_range(0.1..0.6);
    let rot = random_rotation(rng);
    let shape = match rng.random_range(0..4) {
        0 => Shape::Sphere { center: anchor, radius: rng.random_range(0.02..0.2) },
        1 => {
            let d = rot * V3::x() * rng.random_range(0.1..0.8);
            Shape::Capsule { segment: Segment3::new(anchor - d, anchor + d), radius: rng.random_range(0.02..0.1) }
        }
        2 => Shape::Rect {
            rect: Rect3::from_center(anchor, rot * V3::x(), rot * V3::y(), rng.random_range(0.05..0.5), rng.random_range(0.05..0.5))
                .unwrap(),
        },
        _ => {
            let e = [rng.random_range(0.05..0.8), rng.random_range(0.05..0.8), rng.random_range(0.02..0.3)];
            Shape::Cuboid { cuboid: Cuboid::new(anchor, e, *rot.matrix()).unwrap(), exact: false }
        }
    };
    let v = random_point(rng, 0.5);
    let v_hat = v * rng.random_range(0.5..1.0);
    let eps = (v - v_hat).norm() * 1.01;
    let obstacle = Obstacle::new("o", shape, v, v_hat, eps, 0.05).unwrap();
    Scene { model: model.clone(), x, xdot_prev, link, obstacle }
}

impl Scene {
    pub fn h_at(&self, x: &StateVector, shift: &V3) -> f64 {
        let state = RobotState::from_vector(x).unwrap();
        let links = predicted_links(&self.model, &state, &self.xdot_prev, PERIOD);
        safety_value(&links[self.link], &self.obstacle.translated(shift), 0, PERIOD).h
    }

    /// Sine of the smallest angle between the predicted link and any direction
    /// along which the distance can tie (parallel edges or planes), and the
    /// distance itself.
    pub fn tie_measure(&self) -> (f64, f64) {
        let state = RobotState::from_vector(&self.x).unwrap();
        let links = predicted_links(&self.model, &state, &self.xdot_prev, PERIOD);
        let seg = links[self.link].segment;
        let part = &self.obstacle.parts()[0];
        let moved = part.primitive.translated(&(self.obstacle.velocity_measured * PERIOD));
        let d = seg.direction().normalize();
        let sin = |u: V3| d.cross(&u.normalize()).norm();
        let (measure, d2) = match moved {
            Primitive::Point(p) => (1.0, point_segment(&p, &seg.p0, &seg.p1)),
            Primitive::Segment(t) => (sin(t.direction()), segment_segment(&seg.p0, &seg.p1, &t.p0, &t.p1)),
            Primitive::Rect(r) => {
                let n = r.normal().unwrap();
                let tr = TestRect { origin: r.vertices()[0], eu: r.edge_u(), ev: r.edge_v() };
                (d.dot(&n).abs().min(sin(r.edge_u())).min(sin(r.edge_v())), tr.segment(&seg.p0, &seg.p1))
            }
        };
        (measure, d2.sqrt())
    }
}

/// Relative central-difference errors of `∂h/∂x` and `∂h/∂p`, or `None` when
/// the scene is within `1e-3` of a distance tie or of contact.
pub fn gradient_errors(scene: &Scene) -> Option<(f64, f64)> {
    let (tie, dist) = scene.tie_measure();
    if tie < 1e-3 || dist < 1e-3 {
        return None;
    }
    let state = RobotState::from_vector(&scene.x).unwrap();
    let links = predicted_links(&scene.model, &state, &scene.xdot_prev, PERIOD);
    let v = safety_value(&links[scene.link], &scene.obstacle, 0, PERIOD);
    let step = 1e-6;
    let fd_x = StateVector::from_fn(|i, _| {
        let mut e = StateVector::zeros();
        e[i] = step;
        (scene.h_at(&(scene.x + e), &V3::zeros()) - scene.h_at(&(scene.x - e), &V3::zeros())) / (2.0 * step)
    });
    let fd_p = V3::from_fn(|i, _| {
        let mut e = V3::zeros();
        e[i] = step;
        (scene.h_at(&scene.x, &e) - scene.h_at(&scene.x, &-e)) / (2.0 * step)
    });
    let rel = |err: f64, scale: f64| err / (scale + 1e-8);
    Some((rel((v.dh_dx - fd_x).norm(), fd_x.norm()), rel((v.dh_dp - fd_p).norm(), fd_p.norm())))
}

/// `min ½‖u − u_nom‖²` s.t. `a_k·u ≥ b_k`, `lb ≤ u ≤ ub`, solved by
/// accelerated projected gradient with adaptive restart on the dual
/// `min_{λ ≥ 0} ½‖Aᵀλ‖² + λ·(A u_nom − b)`, primal `u = u_nom + Aᵀλ`.
pub fn qp_reference(u_nom: &StateVector, rows: &[(StateVector, f64)], lb: &StateVector, ub: &StateVector) -> StateVector {
    let mut a: Vec<StateVector> = rows.iter().map(|r| r.0).collect();
    let mut b: Vec<f64> = rows.iter().map(|r| r.1).collect();
    for i in 0..8 {
        let mut e = StateVector::zeros();
        e[i] = 1.0;
        a.push(e);
        b.push(lb[i]);
        a.push(-e);
        b.push(-ub[i]);
    }
    let m = a.len();
    let gram = a.iter().fold(nalgebra::SMatrix::<f64, 8, 8>::zeros(), |g, r| g + r * r.transpose());
    let lipschitz = gram.symmetric_eigenvalues().max();
    let primal = |lam: &[f64]| lam.iter().zip(&a).fold(*u_nom, |u, (l, r)| u + r * *l);
    let grad = |lam: &[f64]| {
        let u = primal(lam);
        (0..m).map(|k| a[k].dot(&u) - b[k]).collect::<Vec<f64>>()
    };
    let mut lam = vec![0.0; m];
    let mut y = lam.clone();
    let mut t = 1.0f64;
    for _ in 0..400_000 {
        let g = grad(&y);
        let next: Vec<f64> = (0..m).map(|k| (y[k] - g[k] / lipschitz).max(0.0)).collect();
        let step: Vec<f64> = (0..m).map(|k| next[k] - lam[k]).collect();
        let moved = step.iter().map(|s| s * s).sum::<f64>().sqrt();
        let restart = (0..m).map(|k| g[k] * step[k]).sum::<f64>() > 0.0;
        let t_next = if restart { 1.0 } else { (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0 };
        let mom = if restart { 0.0 } else { (t - 1.0) / t_next };
        y = (0..m).map(|k| next[k] + mom * step[k]).collect();
        lam = next;
        t = t_next;
        if moved < 1e-15 * (1.0 + lam.iter().map(|l| l * l).sum::<f64>().sqrt()) {
            break;
        }
    }
    primal(&lam)
}

/// Random feasible instance: rows are built around a strictly interior point.
pub fn random_feasible_qp<R: Rng>(rng: &mut R, max_rows: usize) -> (StateVector, Vec<(StateVector, f64)>, StateVector) {
    let limit = StateVector::from_fn(|_, _| rng.random_range(0.5..3.0));
    let inner = StateVector::from_fn(|i, _| rng.random_range(-0.5..0.5) * limit[i]);
    let u_nom = StateVector::from_fn(|i, _| rng.random_range(-2.0..2.0) * limit[i]);
    let n = rng.random_range(0..=max_rows);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let a = random_velocity(rng, 1.0);
        let slack = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..0.5) };
        rows.push((a, a.dot(&inner) - slack));
        if rng.random_bool(0.05) {
            let (a, b) = rows[rows.len() - 1];
            let k = rng.random_range(0.5..2.0);
            rows.push((a * k, b * k));
        }
    }
    rows.truncate(max_rows);
    (u_nom, rows, limit)
}
