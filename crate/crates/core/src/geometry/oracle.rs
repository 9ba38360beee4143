//! Brute-force reference distances for fuzzing the exact queries.
//!
//! The squared distance from a moving point `s(ξ)` on a segment to a convex
//! set is convex in `ξ`, so a dense scan followed by golden-section
//! refinement of the best bracket recovers the minimum to rounding level.

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{segment_rect_sqdist, segment_segment_sqdist, Point3, Rect3, Segment3};

const SCAN: usize = 64;
const REFINE: usize = 120;

fn point_on_segment_sqdist(p: &Point3, s: &Segment3) -> f64 {
    let d = s.p1 - s.p0;
    let n = d.norm_squared();
    let t = if n > 0.0 { ((p - s.p0).dot(&d) / n).clamp(0.0, 1.0) } else { 0.0 };
    (s.p0 + d * t - p).norm_squared()
}

fn point_on_rect_sqdist(p: &Point3, r: &Rect3) -> f64 {
    let (s, t) = r.local_coords(p);
    let v0 = r.vertices()[0];
    let q = v0 + r.edge_u() * s.clamp(0.0, 1.0) + r.edge_v() * t.clamp(0.0, 1.0);
    (q - p).norm_squared()
}

fn minimize_on_unit(f: impl Fn(f64) -> f64) -> f64 {
    let mut best = (0, f64::INFINITY);
    for k in 0..=SCAN {
        let v = f(k as f64 / SCAN as f64);
        if v < best.1 {
            best = (k, v);
        }
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = best.0.saturating_sub(1) as f64 / SCAN as f64;
    let mut hi = (best.0 + 1).min(SCAN) as f64 / SCAN as f64;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..REFINE {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    best.1.min(f1).min(f2)
}

pub fn segment_segment_oracle(a: &Segment3, b: &Segment3) -> f64 {
    minimize_on_unit(|x| point_on_segment_sqdist(&a.point_at(x), b))
}

pub fn segment_rect_oracle(s: &Segment3, r: &Rect3) -> f64 {
    minimize_on_unit(|x| point_on_rect_sqdist(&s.point_at(x), r))
}

/// `|d2 − oracle| ≤ 1e-9 + 1e-9·oracle`.
pub fn oracle_error(d2: f64, oracle: f64) -> f64 {
    (d2 - oracle).abs() / (1.0 + oracle)
}

fn point<R: Rng>(rng: &mut R) -> Point3 {
    Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0))
}

/// Random segment pairs, including parallel, degenerate and crossing cases.
pub fn random_segment_pair<R: Rng>(rng: &mut R) -> (Segment3, Segment3) {
    let a = Segment3::new(point(rng), point(rng));
    let b = match rng.random_range(0..10) {
        0 => {
            let off = point(rng) * 0.5;
            Segment3::new(a.p0 + off, a.p0 + off + (a.p1 - a.p0) * rng.random_range(-1.5..1.5))
        }
        1 => {
            let p = point(rng);
            Segment3::new(p, p)
        }
        2 => {
            let m = a.point_at(rng.random_range(0.0..1.0));
            let d = point(rng);
            Segment3::new(m - d, m + d)
        }
        _ => Segment3::new(point(rng), point(rng)),
    };
    (a, b)
}

pub fn random_rect<R: Rng>(rng: &mut R) -> Rect3 {
    let rot = Rotation3::from_euler_angles(
        rng.random_range(-3.2..3.2),
        rng.random_range(-1.6..1.6),
        rng.random_range(-3.2..3.2),
    );
    let (u, v) = (rot * Vector3::x(), rot * Vector3::y());
    Rect3::from_center(point(rng) * 0.5, u, v, rng.random_range(0.05..1.0), rng.random_range(0.05..1.0))
        .expect("orthonormal axes")
}

/// Random segment against a random rectangle; a share of the segments lie
/// in, cross or run parallel to the rectangle's plane.
pub fn random_segment_rect<R: Rng>(rng: &mut R) -> (Segment3, Rect3) {
    let r = random_rect(rng);
    let n = r.normal().expect("non-degenerate");
    let c = r.center();
    let s = match rng.random_range(0..10) {
        0 => {
            let flat = |p: Point3| p - n * n.dot(&(p - c));
            Segment3::new(flat(point(rng)), flat(point(rng)))
        }
        1 => {
            let h = n * rng.random_range(-0.5..0.5);
            let flat = |p: Point3| p - n * n.dot(&(p - c)) + h;
            Segment3::new(flat(point(rng)), flat(point(rng)))
        }
        2 => {
            let m = c + (point(rng) - n * n.dot(&point(rng))) * 0.3;
            Segment3::new(m + n * rng.random_range(0.1..1.0), m - n * rng.random_range(0.1..1.0))
        }
        _ => Segment3::new(point(rng), point(rng)),
    };
    (s, r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzReport {
    pub instances: usize,
    pub seed: u64,
    pub segment_segment_max_error: f64,
    pub segment_rect_max_error: f64,
    pub tolerance: f64,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.segment_segment_max_error <= self.tolerance && self.segment_rect_max_error <= self.tolerance
    }
}

/// `n` instances per query type against the reference; errors are
/// normalized as in [`oracle_error`].
pub fn fuzz(n: usize, seed: u64) -> FuzzReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ss = 0.0_f64;
    let mut sr = 0.0_f64;
    for _ in 0..n {
        let (a, b) = random_segment_pair(&mut rng);
        ss = ss.max(oracle_error(segment_segment_sqdist(&a, &b).d2, segment_segment_oracle(&a, &b)));
        let (s, r) = random_segment_rect(&mut rng);
        sr = sr.max(oracle_error(segment_rect_sqdist(&s, &r).d2, segment_rect_oracle(&s, &r)));
    }
    FuzzReport { instances: n, seed, segment_segment_max_error: ss, segment_rect_max_error: sr, tolerance: 1e-9 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let r = Rect3::from_center(Vector3::zeros(), Vector3::x(), Vector3::y(), 0.5, 0.5).unwrap();
        let s = Segment3::new(Vector3::new(2.0, 0.0, 1.0), Vector3::new(3.0, 0.0, 1.0));
        assert!((segment_rect_oracle(&s, &r) - 3.25).abs() < 1e-12);
        let a = Segment3::new(Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0));
        let b = Segment3::new(Vector3::new(0.5, -1.0, 2.0), Vector3::new(0.5, 1.0, 2.0));
        assert!((segment_segment_oracle(&a, &b) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn small_fuzz_passes() {
        let r = fuzz(300, 7);
        assert!(r.passed(), "{r:?}");
    }
}
