//! Lawson–Hanson active-set solver for small dense non-negative least squares.

use nalgebra::{DMatrix, DVector};

/// Unconstrained least squares restricted to the columns flagged in `cols`.
///
/// Returns a full-length vector with zeros outside `cols`. The selected
/// columns must be linearly independent.
pub(crate) fn lstsq_subset(a: &DMatrix<f64>, b: &DVector<f64>, cols: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..a.ncols()).filter(|&j| cols[j]).collect();
    let mut out = DVector::zeros(a.ncols());
    if idx.is_empty() {
        return out;
    }
    let sub = a.select_columns(&idx);
    let qr = sub.qr();
    let qtb = qr.q().transpose() * b;
    let sol = qr
        .r()
        .solve_upper_triangular(&qtb)
        .unwrap_or_else(|| DVector::zeros(idx.len()));
    for (k, &j) in idx.iter().enumerate() {
        out[j] = sol[k];
    }
    out
}

/// Minimizes `||A x - b||` subject to `x >= 0`, using only the columns marked
/// in `allowed` (others stay at zero).
///
/// `tol` is relative: a column enters the passive set only if its gradient
/// component exceeds `tol * ||A||_F * ||b||`.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, allowed: &[bool], tol: f64) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let mut blocked = vec![false; n];
    let threshold = tol * a.norm() * b.norm();
    let max_outer = 3 * n + 3;

    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| allowed[j] && !passive[j] && !blocked[j] && w[j] > threshold)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(enter) = candidate else { break };
        passive[enter] = true;

        let mut first = true;
        loop {
            let z = lstsq_subset(a, b, &passive);
            if first && z[enter] <= 0.0 {
                // rounding made the entering column useless; never retry it
                passive[enter] = false;
                blocked[enter] = true;
                break;
            }
            first = false;

            if (0..n).filter(|&j| passive[j]).all(|j| z[j] > 0.0) {
                x = z;
                break;
            }

            let alpha = (0..n)
                .filter(|&j| passive[j] && z[j] <= 0.0)
                .map(|j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            for j in 0..n {
                if passive[j] {
                    x[j] += alpha * (z[j] - x[j]);
                    if x[j] <= f64::EPSILON * x.amax().max(1.0) {
                        x[j] = 0.0;
                        passive[j] = false;
                    }
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        // a column that improved the fit may let a blocked one back in
        blocked.iter_mut().for_each(|b| *b = false);
    }

    x.iter_mut().for_each(|v| *v = v.max(0.0));
    x
}
