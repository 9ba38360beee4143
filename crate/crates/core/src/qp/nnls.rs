use nalgebra::{DMatrix, DVector};

/// Lawson–Hanson non-negative least squares: `argmin ‖A x − y‖` over `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let k = a.ncols();
    let tol = 1e-12 * (1.0 + a.amax() * y.amax());
    let mut x = DVector::zeros(k);
    let mut passive = vec![false; k];
    for _ in 0..3 * k + 10 {
        let w = a.transpose() * (y - a * &x);
        let next = (0..k).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = next else { break };
        passive[j] = true;
        for _ in 0..3 * k + 10 {
            let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let sub = DMatrix::from_columns(&idx.iter().map(|&j| a.column(j)).collect::<Vec<_>>());
            let Ok(sol) = sub.svd(true, true).solve(y, 1e-14) else { return x };
            if sol.iter().all(|&v| v > 0.0) {
                for (c, &j) in idx.iter().enumerate() {
                    x[j] = sol[c];
                }
                break;
            }
            let mut step = f64::INFINITY;
            for (c, &j) in idx.iter().enumerate() {
                if sol[c] <= 0.0 {
                    step = step.min(x[j] / (x[j] - sol[c]));
                }
            }
            for (c, &j) in idx.iter().enumerate() {
                x[j] += step * (sol[c] - x[j]);
                if x[j] <= tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    x
}
