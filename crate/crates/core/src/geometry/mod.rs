//! Exact squared-distance queries between 3D primitives.
//!
//! Everything here works on squared distances: the safety functions built on
//! top of these queries are quadratic in the closest-point pair, so taking a
//! square root would only add a non-smooth point at contact.

mod cuboid;
pub mod oracle;
mod gradient;
mod rect;
mod segment;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cuboid::{bounding_volume, cuboid_bounding_box, cuboid_bounding_box_with, Cuboid, CuboidBoundResult};
pub use gradient::{sqdist, sqdist_gradient, translation_gradient, Primitive};
pub use rect::{
    project_segment_to_plane, segment_rect_intersections, segment_rect_intersections_with,
    segment_rect_sqdist, segment_rect_sqdist_with, Rect3, RectIntersections,
};
pub use segment::{
    point_point_sqdist, point_segment_sqdist, segment_segment_sqdist, segment_segment_sqdist_with,
    SegSegScratch,
};

/// A point in world coordinates, meters.
pub type Point3 = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("rectangle is not planar/orthogonal within tolerance: {0}")]
    InvalidRect(String),
    #[error("cuboid is invalid: {0}")]
    InvalidCuboid(String),
    #[error("segment lies {distance:.3e} m off the rectangle plane (limit {limit:.1e} m)")]
    OutOfPlane { distance: f64, limit: f64 },
}

/// Numerical tolerances used by the distance queries.
///
/// The defaults are the module constants below; callers that need a
/// different trade-off pass their own copy to the `*_with` variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Segments are parallel when `Δ ≤ parallel_rel · z1 · z3`.
    pub parallel_rel: f64,
    /// Rectangle shape checks (coplanarity, orthogonality, opposite edges), meters/radians.
    pub rect_shape: f64,
    /// Maximum out-of-plane offset accepted by the intersection routine, meters.
    pub in_plane: f64,
    /// Golden-section termination width for the bounding-volume optimizer, meters.
    pub golden: f64,
}

pub const PARALLEL_REL_TOL: f64 = 1e-12;
pub const RECT_SHAPE_TOL: f64 = 1e-9;
pub const IN_PLANE_TOL: f64 = 1e-7;
pub const GOLDEN_TOL: f64 = 1e-9;

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            parallel_rel: PARALLEL_REL_TOL,
            rect_shape: RECT_SHAPE_TOL,
            in_plane: IN_PLANE_TOL,
            golden: GOLDEN_TOL,
        }
    }
}

/// A 3D segment; `p0 == p1` is allowed and behaves as a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment3 {
    pub p0: Point3,
    pub p1: Point3,
}

impl Segment3 {
    pub fn new(p0: Point3, p1: Point3) -> Self {
        Self { p0, p1 }
    }

    pub fn point(p: Point3) -> Self {
        Self { p0: p, p1: p }
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.p1 - self.p0
    }

    pub fn length(&self) -> f64 {
        self.direction().norm()
    }

    pub fn is_degenerate(&self) -> bool {
        self.p0 == self.p1
    }

    /// Point at parameter `t`; the endpoints are returned exactly at 0 and 1.
    pub fn point_at(&self, t: f64) -> Point3 {
        if t == 0.0 {
            self.p0
        } else if t == 1.0 {
            self.p1
        } else {
            self.p0 + (self.p1 - self.p0) * t
        }
    }

    pub fn translated(&self, offset: &Vector3<f64>) -> Self {
        Self { p0: self.p0 + offset, p1: self.p1 + offset }
    }

    pub fn is_finite(&self) -> bool {
        is_finite(&self.p0) && is_finite(&self.p1)
    }
}

/// Result of a minimum squared-distance query.
///
/// `xi` is the parameter of `witness_a` when the first primitive is a
/// segment, `tau` the parameter of `witness_b` when the second one is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistResult {
    pub d2: f64,
    pub witness_a: Point3,
    pub witness_b: Point3,
    pub xi: Option<f64>,
    pub tau: Option<f64>,
}

impl DistResult {
    pub(crate) fn from_witnesses(witness_a: Point3, witness_b: Point3, xi: Option<f64>, tau: Option<f64>) -> Self {
        Self { d2: (witness_a - witness_b).norm_squared(), witness_a, witness_b, xi, tau }
    }

    /// Same query seen from the other primitive.
    pub fn swapped(self) -> Self {
        Self {
            d2: self.d2,
            witness_a: self.witness_b,
            witness_b: self.witness_a,
            xi: self.tau,
            tau: self.xi,
        }
    }

    pub fn distance(&self) -> f64 {
        self.d2.sqrt()
    }
}

pub(crate) fn is_finite(p: &Point3) -> bool {
    p.iter().all(|c| c.is_finite())
}

/// Keeps the first strictly smaller candidate, so ties resolve to the earliest one.
pub(crate) fn min_first(best: Option<DistResult>, candidate: DistResult) -> Option<DistResult> {
    match best {
        Some(b) if b.d2 <= candidate.d2 => Some(b),
        _ => Some(candidate),
    }
}
