use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{is_finite, GeometryError, Point3, Rect3, Tolerances};

/// An oriented box. Extents are canonicalized on construction so that
/// `length ≥ width ≥ height`; the columns of `rotation` are the matching
/// length, width and height axes (a proper rotation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cuboid {
    center: Point3,
    half_extents: [f64; 3],
    rotation: Matrix3<f64>,
}

impl Cuboid {
    /// `extents` are full edge lengths along the columns of `rotation`, in any order.
    pub fn new(center: Point3, extents: [f64; 3], rotation: Matrix3<f64>) -> Result<Self, GeometryError> {
        if !is_finite(&center) || !extents.iter().all(|e| e.is_finite()) || !rotation.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite("cuboid"));
        }
        if extents.iter().any(|&e| e <= 0.0) {
            return Err(GeometryError::InvalidCuboid(format!("extents must be positive, got {extents:?}")));
        }
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if ortho > 1e-9 {
            return Err(GeometryError::InvalidCuboid(format!("rotation not orthonormal (error {ortho:.3e})")));
        }
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| extents[j].total_cmp(&extents[i]));
        let mut rot = Matrix3::from_columns(&[rotation.column(order[0]), rotation.column(order[1]), rotation.column(order[2])]);
        if rot.determinant() < 0.0 {
            let flipped = -rot.column(2);
            rot.set_column(2, &flipped);
        }
        Ok(Self {
            center,
            half_extents: order.map(|i| extents[i] * 0.5),
            rotation: rot,
        })
    }

    pub fn axis_aligned(center: Point3, extents: [f64; 3]) -> Result<Self, GeometryError> {
        Self::new(center, extents, Matrix3::identity())
    }

    pub fn center(&self) -> Point3 {
        self.center
    }

    /// `[a_r, b_r, h_r]` with `a_r ≥ b_r ≥ h_r`.
    pub fn extents(&self) -> [f64; 3] {
        self.half_extents.map(|h| 2.0 * h)
    }

    pub fn half_extents(&self) -> [f64; 3] {
        self.half_extents
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn axis(&self, i: usize) -> Vector3<f64> {
        self.rotation.column(i).into_owned()
    }

    pub fn translated(&self, offset: &Vector3<f64>) -> Self {
        Self { center: self.center + offset, ..*self }
    }

    /// World point for local coordinates along (length, width, height).
    pub fn local_to_world(&self, local: &Vector3<f64>) -> Point3 {
        self.center + self.rotation * local
    }

    pub fn vertices(&self) -> [Point3; 8] {
        let [a, b, h] = self.half_extents;
        let mut out = [Point3::zeros(); 8];
        for (k, v) in out.iter_mut().enumerate() {
            let sx = if k & 1 == 0 { -a } else { a };
            let sy = if k & 2 == 0 { -b } else { b };
            let sz = if k & 4 == 0 { -h } else { h };
            *v = self.local_to_world(&Vector3::new(sx, sy, sz));
        }
        out
    }

    /// The six faces as rectangles, ordered ±length, ±width, ±height.
    pub fn faces(&self) -> [Rect3; 6] {
        let h = self.half_extents;
        let faces = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];
        let mut out = Vec::with_capacity(6);
        for &(n, u, v) in &faces {
            for sign in [1.0, -1.0] {
                let c = self.center + self.axis(n) * (sign * h[n]);
                out.push(
                    Rect3::from_center(c, self.axis(u), self.axis(v), h[u], h[v])
                        .expect("faces of an orthonormal frame are rectangles"),
                );
            }
        }
        out.try_into().expect("six faces")
    }
}

/// The rectangle-swept-sphere bounding volume of a cuboid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuboidBoundResult {
    /// Inner rectangle, centered on the cuboid, spanning the length/width plane.
    pub rect2: Rect3,
    /// Sweep radius.
    pub r_e: f64,
    /// Inset of `rect2` from the length/width faces.
    pub d_re: f64,
    pub volume: f64,
}

/// Volume of the rectangle `(a − 2d) × (b − 2d)` swept by a sphere of radius
/// `sqrt(2d² + h²/4)`.
pub fn bounding_volume(a: f64, b: f64, h: f64, d_re: f64) -> f64 {
    let x = a - 2.0 * d_re;
    let y = b - 2.0 * d_re;
    let r = (2.0 * d_re * d_re + h * h / 4.0).sqrt();
    2.0 * x * y * r + PI * r * r * (x + y) + 4.0 / 3.0 * PI * r * r * r
}

pub fn cuboid_bounding_box(c: &Cuboid) -> CuboidBoundResult {
    cuboid_bounding_box_with(c, &Tolerances::default())
}

const COARSE_SCAN_POINTS: usize = 64;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes the bounding volume over the inset `d_re ∈ [0, b_r/2]`.
pub fn cuboid_bounding_box_with(c: &Cuboid, tol: &Tolerances) -> CuboidBoundResult {
    let [a, b, h] = c.extents();
    let f = |d: f64| bounding_volume(a, b, h, d);
    let upper = b / 2.0;

    // Coarse scan first so a non-unimodal profile cannot trap the bracket.
    let step = upper / (COARSE_SCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..COARSE_SCAN_POINTS).map(|k| if k + 1 == COARSE_SCAN_POINTS { upper } else { k as f64 * step }).collect();
    let (k_best, _) = grid
        .iter()
        .map(|&d| f(d))
        .enumerate()
        .fold((0, f64::INFINITY), |(kb, vb), (k, v)| if v < vb { (k, v) } else { (kb, vb) });

    let mut lo = grid[k_best.saturating_sub(1)];
    let mut hi = grid[(k_best + 1).min(COARSE_SCAN_POINTS - 1)];
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol.golden {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let d_re = [grid[k_best], mid, lo, hi]
        .into_iter()
        .fold((f64::INFINITY, 0.0), |(vb, db), d| {
            let v = f(d);
            if v < vb {
                (v, d)
            } else {
                (vb, db)
            }
        })
        .1;

    let rect2 = Rect3::from_center(c.center(), c.axis(0), c.axis(1), a / 2.0 - d_re, b / 2.0 - d_re)
        .expect("axes of an orthonormal frame");
    CuboidBoundResult {
        rect2,
        r_e: (2.0 * d_re * d_re + h * h / 4.0).sqrt(),
        d_re,
        volume: f(d_re),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn canonicalizes_extents_and_keeps_a_rotation() {
        let c = Cuboid::axis_aligned(Point3::zeros(), [0.2, 1.5, 0.7]).unwrap();
        assert_eq!(c.extents(), [1.5, 0.7, 0.2]);
        assert_relative_eq!(c.rotation().determinant(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(c.axis(0), Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Cuboid::axis_aligned(Point3::zeros(), [1.0, 0.0, 1.0]).is_err());
        let skew = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Cuboid::new(Point3::zeros(), [1.0, 1.0, 1.0], skew).is_err());
    }

    #[test]
    fn flat_limit_has_zero_volume() {
        assert_eq!(bounding_volume(2.0, 1.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn cube_volume_at_zero_inset() {
        let v0 = bounding_volume(2.0, 2.0, 2.0, 0.0);
        assert_relative_eq!(v0, 8.0 + 4.0 * PI + 4.0 / 3.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(v0, 24.7551, epsilon = 1e-4);
        let c = Cuboid::axis_aligned(Point3::zeros(), [2.0, 2.0, 2.0]).unwrap();
        let best = cuboid_bounding_box(&c);
        assert!(best.volume <= v0.min(bounding_volume(2.0, 2.0, 2.0, 1.0)));
    }

    #[test]
    fn vertices_lie_within_sweep_radius() {
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -0.2, 1.1).into_inner();
        let c = Cuboid::new(Point3::new(1.0, 2.0, 0.5), [1.2, 0.5, 0.3], rot).unwrap();
        let bb = cuboid_bounding_box(&c);
        for v in c.vertices() {
            let to_rect = crate::geometry::segment_rect_sqdist(&crate::geometry::Segment3::point(v), &bb.rect2);
            assert!(to_rect.d2.sqrt() <= bb.r_e + 1e-12);
        }
    }
}
