//! Small numerical helpers shared by the solvers.

/// `ln sum_k w_k exp(z_k)` over entries with positive weight, evaluated with
/// max-subtraction. Returns `-inf` when no weight is positive.
pub fn log_sum_exp_weighted(weights: &[f64], z: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), z.len());
    let mut m = f64::NEG_INFINITY;
    for (&w, &v) in weights.iter().zip(z) {
        if w > 0.0 && v > m {
            m = v;
        }
    }
    if m == f64::NEG_INFINITY {
        return m;
    }
    let mut s = 0.0;
    for (&w, &v) in weights.iter().zip(z) {
        if w > 0.0 {
            s += w * (v - m).exp();
        }
    }
    m + s.ln()
}

/// Unweighted `ln sum_k exp(z_k)`.
pub fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + z.iter().map(|&v| (v - m).exp()).sum::<f64>().ln()
}

/// Bisection on a sign-changing bracket `[lo, hi]`; stops when the bracket
/// is narrower than `xtol` (absolute) or after `max_iter` halvings.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Some(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Sup-norm of the element-wise log ratio of two positive slices.
pub fn max_log_diff<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x.ln() - y.ln()).abs()).fold(0.0, f64::max)
}

/// Solve `G x = b` for a symmetric positive definite `G` stored row-wise.
/// Returns `None` when a pivot is not positive.
pub fn solve_spd(g: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = b.len();
    let mut l = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let s: f64 = g[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; m];
    for i in 0..m {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        x[i] = (y[i] - (i + 1..m).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}
