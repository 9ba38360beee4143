use super::{min_first, DistResult, Point3, Segment3, Tolerances};

pub fn point_point_sqdist(a: &Point3, b: &Point3) -> DistResult {
    DistResult::from_witnesses(*a, *b, None, None)
}

/// Squared distance from `p` to `s`; `tau` holds the clamped foot parameter.
pub fn point_segment_sqdist(p: &Point3, s: &Segment3) -> DistResult {
    let d = s.direction();
    let dd = d.norm_squared();
    let t = if dd == 0.0 { 0.0 } else { ((p - s.p0).dot(&d) / dd).clamp(0.0, 1.0) };
    DistResult::from_witnesses(*p, s.point_at(t), None, Some(t))
}

/// Coefficients of the squared distance between `A(ξ) = A0 + ξ(A1 − A0)` and
/// `B(τ) = B0 + τ(B1 − B0)`:
///
/// ```text
/// D(ξ, τ) = z1 ξ² − 2 z2 ξ τ + z3 τ² + 2 z4 ξ − 2 z5 τ + z6
/// ```
///
/// together with the center `(ξ̄, τ̄)` of its elliptic level sets and the
/// value `D0` at that center. When `Δ = z1 z3 − z2² = 0` the center does not
/// exist and `xi_bar`, `tau_bar`, `d0` are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegSegScratch {
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub z4: f64,
    pub z5: f64,
    pub z6: f64,
    pub delta: f64,
    pub xi_bar: f64,
    pub tau_bar: f64,
    pub d0: f64,
}

impl SegSegScratch {
    pub fn new(a: &Segment3, b: &Segment3) -> Self {
        let da = a.direction();
        let db = b.direction();
        let w = a.p0 - b.p0;
        let z1 = da.dot(&da);
        let z2 = da.dot(&db);
        let z3 = db.dot(&db);
        let z4 = da.dot(&w);
        let z5 = db.dot(&w);
        let z6 = w.dot(&w);
        let delta = z1 * z3 - z2 * z2;
        let (xi_bar, tau_bar, d0) = if delta > 0.0 {
            let xi = (z2 * z5 - z3 * z4) / delta;
            let tau = (z1 * z5 - z2 * z4) / delta;
            // The quadratic form has a −2 z2 ξ τ cross term, so the value at the
            // stationary point carries the same sign.
            let d0 = z6 - (z1 * xi * xi - 2.0 * z2 * xi * tau + z3 * tau * tau);
            (xi, tau, d0)
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        Self { z1, z2, z3, z4, z5, z6, delta, xi_bar, tau_bar, d0 }
    }

    pub fn eval(&self, xi: f64, tau: f64) -> f64 {
        self.z1 * xi * xi - 2.0 * self.z2 * xi * tau + self.z3 * tau * tau + 2.0 * self.z4 * xi
            - 2.0 * self.z5 * tau
            + self.z6
    }

    pub fn is_parallel(&self, parallel_rel: f64) -> bool {
        self.delta <= parallel_rel * self.z1 * self.z3
    }

    pub fn center_in_domain(&self) -> bool {
        (0.0..=1.0).contains(&self.xi_bar) && (0.0..=1.0).contains(&self.tau_bar)
    }
}

pub fn segment_segment_sqdist(a: &Segment3, b: &Segment3) -> DistResult {
    segment_segment_sqdist_with(a, b, &Tolerances::default())
}

pub fn segment_segment_sqdist_with(a: &Segment3, b: &Segment3, tol: &Tolerances) -> DistResult {
    let scratch = SegSegScratch::new(a, b);

    if scratch.z1 == 0.0 {
        let r = point_segment_sqdist(&a.p0, b);
        return DistResult { xi: Some(0.0), ..r };
    }
    if scratch.z3 == 0.0 {
        let r = point_segment_sqdist(&b.p0, a).swapped();
        return DistResult { tau: Some(0.0), ..r };
    }

    if !scratch.is_parallel(tol.parallel_rel) && scratch.center_in_domain() {
        let (xi, tau) = (scratch.xi_bar, scratch.tau_bar);
        return DistResult::from_witnesses(a.point_at(xi), b.point_at(tau), Some(xi), Some(tau));
    }

    boundary_minimum(a, b)
}

/// Minimum of D over the four edges of the parameter square, in the fixed
/// order ξ = 0, ξ = 1, τ = 0, τ = 1. Each edge is a clamped 1D quadratic,
/// i.e. a point-to-segment query.
fn boundary_minimum(a: &Segment3, b: &Segment3) -> DistResult {
    let candidates = [
        {
            let r = point_segment_sqdist(&a.p0, b);
            DistResult { xi: Some(0.0), ..r }
        },
        {
            let r = point_segment_sqdist(&a.p1, b);
            DistResult { xi: Some(1.0), ..r }
        },
        {
            let r = point_segment_sqdist(&b.p0, a).swapped();
            DistResult { tau: Some(0.0), ..r }
        },
        {
            let r = point_segment_sqdist(&b.p1, a).swapped();
            DistResult { tau: Some(1.0), ..r }
        },
    ];
    candidates.into_iter().fold(None, min_first).expect("four candidates")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn seg(a: [f64; 3], b: [f64; 3]) -> Segment3 {
        Segment3::new(Vector3::from(a), Vector3::from(b))
    }

    #[test]
    fn point_point_examples() {
        let o = Vector3::zeros();
        assert_eq!(point_point_sqdist(&o, &o).d2, 0.0);
        assert_eq!(point_point_sqdist(&o, &Vector3::new(3.0, 4.0, 0.0)).d2, 25.0);
    }

    #[test]
    fn point_segment_examples() {
        let s = seg([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let r = point_segment_sqdist(&Vector3::new(0.0, 1.0, 0.0), &s);
        assert_eq!(r.d2, 1.0);
        assert_eq!(r.tau, Some(0.5));
        let r = point_segment_sqdist(&Vector3::new(2.0, 0.0, 0.0), &s);
        assert_eq!(r.d2, 1.0);
        assert_eq!(r.tau, Some(1.0));
    }

    #[test]
    fn parallel_offset() {
        let r = segment_segment_sqdist(&seg([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]), &seg([0.0, 1.0, 0.0], [1.0, 1.0, 0.0]));
        assert_eq!(r.d2, 1.0);
    }

    #[test]
    fn parallel_short_segment_inside_long_span() {
        // Neither endpoint of the long segment is closest; the short segment's are.
        let a = seg([-5.0, 0.0, 0.0], [5.0, 0.0, 0.0]);
        let b = seg([0.0, 1.0, 0.0], [1.0, 1.0, 0.0]);
        assert_eq!(segment_segment_sqdist(&a, &b).d2, 1.0);
        assert_eq!(segment_segment_sqdist(&b, &a).d2, 1.0);
    }

    #[test]
    fn crossing_segments() {
        let r = segment_segment_sqdist(&seg([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]), &seg([0.0, -1.0, 0.0], [0.0, 1.0, 0.0]));
        assert_eq!(r.d2, 0.0);
        assert_eq!((r.xi, r.tau), (Some(0.5), Some(0.5)));
    }

    #[test]
    fn skew_interior_center() {
        let r = segment_segment_sqdist(&seg([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]), &seg([0.5, 1.0, -1.0], [0.5, 1.0, 1.0]));
        assert_relative_eq!(r.d2, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn center_value_matches_witness_distance() {
        let a = seg([0.1, -0.3, 0.2], [1.2, 0.4, -0.5]);
        let b = seg([0.3, 0.9, 0.0], [0.8, -0.7, 0.6]);
        let s = SegSegScratch::new(&a, &b);
        assert!(s.center_in_domain());
        let direct = (a.point_at(s.xi_bar) - b.point_at(s.tau_bar)).norm_squared();
        assert_relative_eq!(s.d0, direct, epsilon = 1e-12);
        assert_relative_eq!(s.eval(s.xi_bar, s.tau_bar), direct, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_matches_point_query_exactly() {
        let p = Vector3::new(0.3, 0.7, -0.2);
        let b = seg([1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]);
        let ss = segment_segment_sqdist(&Segment3::point(p), &b);
        let ps = point_segment_sqdist(&p, &b);
        assert_eq!(ss.d2, ps.d2);
        let rev = segment_segment_sqdist(&b, &Segment3::point(p));
        assert_eq!(rev.d2, ps.d2);
    }
}
