//! Dual active-set projection onto a polyhedron (Goldfarb–Idnani with an
//! identity Hessian): `min ½‖u − u0‖²  s.t.  A u ≥ b`.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ProjectError {
    Infeasible,
    IterationCap,
}

#[derive(Debug, Clone)]
pub(crate) struct Projection {
    pub u: DVector<f64>,
    /// One multiplier per row, zero for inactive rows.
    pub lambda: DVector<f64>,
    pub iterations: usize,
}

const VIOLATION_TOL: f64 = 1e-12;
const DEPENDENCE_TOL: f64 = 1e-10;

/// `z`: component of `a_p` orthogonal to the active normals; `r`: the
/// coefficients of its projection onto them.
fn directions(a: &DMatrix<f64>, active: &[usize], ap: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    if active.is_empty() {
        return (ap.clone(), DVector::zeros(0));
    }
    let n = DMatrix::from_columns(&active.iter().map(|&i| a.row(i).transpose()).collect::<Vec<_>>());
    let qr = n.qr();
    let q = qr.q();
    let r_mat = qr.r();
    let qta = q.transpose() * ap;
    let r = r_mat.solve_upper_triangular(&qta).unwrap_or_else(|| DVector::zeros(active.len()));
    let z = ap - &q * qta;
    (z, r)
}

pub(crate) fn project(
    u0: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    max_iter: usize,
) -> Result<Projection, ProjectError> {
    let m = a.nrows();
    let norms: Vec<f64> = (0..m).map(|i| a.row(i).norm()).collect();
    let mut u = u0.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut lam: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let slack = |u: &DVector<f64>, i: usize| a.row(i).dot(&u.transpose()) - b[i];

    loop {
        // Most violated row, normalized; ties go to the lowest index.
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..m {
            if norms[i] == 0.0 || active.contains(&i) {
                continue;
            }
            let v = slack(&u, i) / norms[i];
            if v < -VIOLATION_TOL && pick.map_or(true, |(_, best)| v < best) {
                pick = Some((i, v));
            }
        }
        let Some((p, _)) = pick else {
            let mut lambda = DVector::zeros(m);
            for (&i, &l) in active.iter().zip(&lam) {
                lambda[i] = l;
            }
            return Ok(Projection { u, lambda, iterations });
        };
        let ap: DVector<f64> = a.row(p).transpose();
        let mut lam_p = 0.0;
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(ProjectError::IterationCap);
            }
            let (z, r) = directions(a, &active, &ap);
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (k, &rk) in r.iter().enumerate() {
                if rk > 0.0 {
                    let t = lam[k] / rk;
                    if t < t1 {
                        t1 = t;
                        drop = Some(k);
                    }
                }
            }
            let zz = z.dot(&ap);
            let t2 = if z.norm() > DEPENDENCE_TOL * norms[p] && zz > 0.0 {
                (-slack(&u, p) / zz).max(0.0)
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if t == f64::INFINITY {
                return Err(ProjectError::Infeasible);
            }
            for (k, l) in lam.iter_mut().enumerate() {
                *l = (*l - t * r[k]).max(0.0);
            }
            lam_p += t;
            if t2.is_finite() {
                u.axpy(t, &z, 1.0);
            }
            if t2 <= t1 {
                active.push(p);
                lam.push(lam_p);
                break;
            }
            let k = drop.expect("partial step has a blocking row");
            active.remove(k);
            lam.remove(k);
        }
    }
}
