use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::segment::segment_segment_sqdist_with;
use super::{is_finite, min_first, DistResult, GeometryError, Point3, Segment3, Tolerances};

/// A rectangle given by four vertices in cyclic order.
///
/// Zero-length edges are accepted; such a rectangle degenerates to a segment
/// or a point and has no well-defined plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[Point3; 4]", into = "[Point3; 4]")]
pub struct Rect3 {
    vertices: [Point3; 4],
}

impl TryFrom<[Point3; 4]> for Rect3 {
    type Error = GeometryError;

    fn try_from(vertices: [Point3; 4]) -> Result<Self, Self::Error> {
        Rect3::new(vertices)
    }
}

impl From<Rect3> for [Point3; 4] {
    fn from(r: Rect3) -> Self {
        r.vertices
    }
}

impl Rect3 {
    pub fn new(vertices: [Point3; 4]) -> Result<Self, GeometryError> {
        Self::new_with(vertices, &Tolerances::default())
    }

    pub fn new_with(vertices: [Point3; 4], tol: &Tolerances) -> Result<Self, GeometryError> {
        if !vertices.iter().all(is_finite) {
            return Err(GeometryError::NonFinite("rectangle vertex"));
        }
        let [v0, v1, v2, v3] = vertices;
        let eu = v1 - v0;
        let ev = v3 - v0;
        // Opposite edges equal and parallel, and the fourth vertex in the plane,
        // all reduce to V2 closing the parallelogram.
        let closure = (v2 - (v1 + ev)).norm();
        if closure > tol.rect_shape {
            return Err(GeometryError::InvalidRect(format!("fourth vertex off by {closure:.3e} m")));
        }
        let (lu, lv) = (eu.norm(), ev.norm());
        if lu > 0.0 && lv > 0.0 {
            let cos = eu.dot(&ev) / (lu * lv);
            if cos.abs() > tol.rect_shape {
                return Err(GeometryError::InvalidRect(format!("adjacent edges off orthogonal by {cos:.3e} rad")));
            }
        }
        Ok(Self { vertices })
    }

    /// Rectangle centered at `center` spanning `±half_u` along `u` and `±half_v` along `v`.
    /// `u` and `v` must be orthonormal.
    pub fn from_center(
        center: Point3,
        u: Vector3<f64>,
        v: Vector3<f64>,
        half_u: f64,
        half_v: f64,
    ) -> Result<Self, GeometryError> {
        let du = u * half_u;
        let dv = v * half_v;
        Self::new([center - du - dv, center + du - dv, center + du + dv, center - du + dv])
    }

    pub fn vertices(&self) -> &[Point3; 4] {
        &self.vertices
    }

    pub fn center(&self) -> Point3 {
        (self.vertices[0] + self.vertices[2]) * 0.5
    }

    pub fn edge_u(&self) -> Vector3<f64> {
        self.vertices[1] - self.vertices[0]
    }

    pub fn edge_v(&self) -> Vector3<f64> {
        self.vertices[3] - self.vertices[0]
    }

    pub fn is_degenerate(&self) -> bool {
        self.edge_u().norm_squared() == 0.0 || self.edge_v().norm_squared() == 0.0
    }

    /// Unit normal, `None` for a degenerate rectangle.
    pub fn normal(&self) -> Option<Vector3<f64>> {
        if self.is_degenerate() {
            return None;
        }
        self.edge_u().cross(&self.edge_v()).try_normalize(0.0)
    }

    /// Edges V0V1, V1V2, V2V3, V3V0.
    pub fn edges(&self) -> [Segment3; 4] {
        let v = &self.vertices;
        [
            Segment3::new(v[0], v[1]),
            Segment3::new(v[1], v[2]),
            Segment3::new(v[2], v[3]),
            Segment3::new(v[3], v[0]),
        ]
    }

    pub fn translated(&self, offset: &Vector3<f64>) -> Self {
        Self { vertices: self.vertices.map(|p| p + offset) }
    }

    /// Rectangle coordinates `(s, t)` of `p` with `p ≈ V0 + s·eu + t·ev`
    /// (the normal component is discarded).
    pub fn local_coords(&self, p: &Point3) -> (f64, f64) {
        let (eu, ev) = (self.edge_u(), self.edge_v());
        let w = p - self.vertices[0];
        let nu = eu.norm_squared();
        let nv = ev.norm_squared();
        let s = if nu > 0.0 { w.dot(&eu) / nu } else { 0.0 };
        let t = if nv > 0.0 { w.dot(&ev) / nv } else { 0.0 };
        (s, t)
    }
}

/// Orthogonally projects both endpoints onto the rectangle's plane.
/// A degenerate rectangle has no plane and the segment is returned as is.
pub fn project_segment_to_plane(s: &Segment3, r: &Rect3) -> Segment3 {
    let Some(n) = r.normal() else {
        return *s;
    };
    let origin = r.vertices[0];
    let proj = |p: &Point3| p - n * (p - origin).dot(&n);
    Segment3::new(proj(&s.p0), proj(&s.p1))
}

/// Intersection of an in-plane segment with the rectangle.
///
/// `n` counts boundary crossings; a segment lying entirely inside reports its
/// own endpoints as the two interval ends (`n == 2`). `interval` holds the
/// clipped parameter range on the segment when the intersection is non-empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectIntersections {
    pub n: usize,
    pub points: [Point3; 2],
    pub interval: Option<(f64, f64)>,
}

pub fn segment_rect_intersections(s_proj: &Segment3, r: &Rect3) -> Result<RectIntersections, GeometryError> {
    segment_rect_intersections_with(s_proj, r, &Tolerances::default())
}

pub fn segment_rect_intersections_with(
    s_proj: &Segment3,
    r: &Rect3,
    tol: &Tolerances,
) -> Result<RectIntersections, GeometryError> {
    if let Some(n) = r.normal() {
        let off = ((s_proj.p0 - r.vertices[0]).dot(&n).abs()).max((s_proj.p1 - r.vertices[0]).dot(&n).abs());
        if off > tol.in_plane {
            return Err(GeometryError::OutOfPlane { distance: off, limit: tol.in_plane });
        }
    }
    let none = RectIntersections { n: 0, points: [s_proj.p0, s_proj.p1], interval: None };

    let (s0, t0) = r.local_coords(&s_proj.p0);
    let (s1, t1) = r.local_coords(&s_proj.p1);
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    // Liang–Barsky clipping against the two slabs 0 ≤ s ≤ 1 and 0 ≤ t ≤ 1.
    for (start, end) in [(s0, s1), (t0, t1)] {
        let delta = end - start;
        if delta == 0.0 {
            if !(0.0..=1.0).contains(&start) {
                return Ok(none);
            }
            continue;
        }
        let (mut ta, mut tb) = ((0.0 - start) / delta, (1.0 - start) / delta);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        lo = lo.max(ta);
        hi = hi.min(tb);
    }
    if lo > hi {
        return Ok(none);
    }

    let a = s_proj.point_at(lo);
    let b = s_proj.point_at(hi);
    let enters = lo > 0.0;
    let exits = hi < 1.0;
    let out = if lo == hi {
        RectIntersections { n: 1, points: [a, a], interval: Some((lo, hi)) }
    } else {
        match (enters, exits) {
            (true, true) | (false, false) => RectIntersections { n: 2, points: [a, b], interval: Some((lo, hi)) },
            (true, false) => RectIntersections { n: 1, points: [a, a], interval: Some((lo, hi)) },
            (false, true) => RectIntersections { n: 1, points: [b, b], interval: Some((lo, hi)) },
        }
    };
    Ok(out)
}

pub fn segment_rect_sqdist(s: &Segment3, r: &Rect3) -> DistResult {
    segment_rect_sqdist_with(s, r, &Tolerances::default())
}

/// Minimum squared distance between a segment and a filled rectangle.
///
/// The case-selected candidate `l_c` (the part of the projected segment that
/// lies inside the rectangle) is always evaluated together with the four
/// rectangle edges; the true minimum is attained on one of them. `tau` of the
/// result is not reported because the rectangle has two parameters.
pub fn segment_rect_sqdist_with(s: &Segment3, r: &Rect3, tol: &Tolerances) -> DistResult {
    let v = r.vertices();
    if r.is_degenerate() {
        // The rectangle collapses to its diagonal.
        let d = segment_segment_sqdist_with(s, &Segment3::new(v[0], v[2]), tol);
        return DistResult { tau: None, ..d };
    }

    let proj = project_segment_to_plane(s, r);
    let mut candidates: Vec<Segment3> = Vec::with_capacity(5);
    match segment_rect_intersections_with(&proj, r, tol) {
        Ok(hit) => match (hit.n, hit.interval) {
            (2, _) => candidates.push(Segment3::new(hit.points[0], hit.points[1])),
            (1, Some((lo, hi))) => {
                // Only the sub-segment between I and the projected endpoint that
                // lies inside the rectangle belongs to it.
                let inside = if lo == 0.0 {
                    proj.p0
                } else if hi == 1.0 {
                    proj.p1
                } else {
                    hit.points[0]
                };
                candidates.push(Segment3::new(hit.points[0], inside));
            }
            _ => {}
        },
        Err(e) => log::warn!("segment_rect_sqdist: {e}; falling back to edges"),
    }
    candidates.extend(r.edges());

    let best = candidates
        .iter()
        .map(|c| segment_segment_sqdist_with(s, c, tol))
        .fold(None, min_first)
        .expect("at least four candidates");
    DistResult { tau: None, ..best }
}
