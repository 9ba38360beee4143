use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::rect::segment_rect_sqdist;
use super::segment::{point_point_sqdist, point_segment_sqdist, segment_segment_sqdist};
use super::{min_first, DistResult, Point3, Rect3, Segment3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Primitive {
    Point(Point3),
    Segment(Segment3),
    Rect(Rect3),
}

impl Primitive {
    pub fn translated(&self, offset: &Vector3<f64>) -> Self {
        match self {
            Primitive::Point(p) => Primitive::Point(p + offset),
            Primitive::Segment(s) => Primitive::Segment(s.translated(offset)),
            Primitive::Rect(r) => Primitive::Rect(r.translated(offset)),
        }
    }
}

/// Minimum squared distance between any two primitives.
pub fn sqdist(a: &Primitive, b: &Primitive) -> DistResult {
    use Primitive::*;
    match (a, b) {
        (Point(p), Point(q)) => point_point_sqdist(p, q),
        (Point(p), Segment(s)) => point_segment_sqdist(p, s),
        (Segment(s), Point(p)) => point_segment_sqdist(p, s).swapped(),
        (Segment(s), Segment(t)) => segment_segment_sqdist(s, t),
        (Segment(s), Rect(r)) => segment_rect_sqdist(s, r),
        (Rect(r), Segment(s)) => segment_rect_sqdist(s, r).swapped(),
        (Point(p), Rect(r)) => DistResult { xi: None, ..segment_rect_sqdist(&super::Segment3::point(*p), r) },
        (Rect(r), Point(p)) => DistResult { tau: None, ..segment_rect_sqdist(&super::Segment3::point(*p), r).swapped() },
        (Rect(r), Rect(q)) => {
            // Two rectangles that touch or cross always have an edge of one
            // meeting the other, so the edge queries cover every case.
            let forward = r.edges().into_iter().map(|e| DistResult { xi: None, ..segment_rect_sqdist(&e, q) });
            let backward = q.edges().into_iter().map(|e| DistResult { tau: None, ..segment_rect_sqdist(&e, r).swapped() });
            forward.chain(backward).fold(None, min_first).expect("eight candidates")
        }
    }
}

/// Gradient of `result.d2` with respect to each defining point of `first`
/// (the primitive that produced `witness_a`).
///
/// Envelope argument: at the minimizer, moving a defining point moves the
/// witness by its barycentric weight while the other primitive's witness stays
/// optimal, so `∂d2/∂v = 2 (w_a − w_b) · weight(v)`. At ties this is the
/// subgradient belonging to the witness pair the query returned.
pub fn sqdist_gradient(first: &Primitive, result: &DistResult) -> Vec<Vector3<f64>> {
    let g = (result.witness_a - result.witness_b) * 2.0;
    match first {
        Primitive::Point(_) => vec![g],
        Primitive::Segment(s) => {
            let xi = result.xi.unwrap_or_else(|| {
                let d = s.direction();
                let dd = d.norm_squared();
                if dd == 0.0 {
                    0.0
                } else {
                    ((result.witness_a - s.p0).dot(&d) / dd).clamp(0.0, 1.0)
                }
            });
            vec![g * (1.0 - xi), g * xi]
        }
        Primitive::Rect(r) => {
            // Weights of the affine parameterization V0 + s(V1 − V0) + t(V3 − V0).
            let (s, t) = r.local_coords(&result.witness_a);
            vec![g * (1.0 - s - t), g * s, Vector3::zeros(), g * t]
        }
    }
}

/// Gradients of `d2` with respect to rigid translations of the first and of
/// the second primitive.
pub fn translation_gradient(result: &DistResult) -> (Vector3<f64>, Vector3<f64>) {
    let g = (result.witness_a - result.witness_b) * 2.0;
    (g, -g)
}
