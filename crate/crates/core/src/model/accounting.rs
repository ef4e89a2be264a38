//! Market clearing and national accounts.
//!
//! Country-by-sector arrays are `[n, j]`; trade shares are `[n, i, j]` with
//! `n` the importer.

use ndarray::{Array1, Array2, Array3};

/// Tariff revenue `T_n = sum_j sum_i tau_ni X_n pi_ni / (1 + tau_ni)`.
pub fn tariff_revenue(x: &Array2<f64>, pi: &Array3<f64>, tau: &Array3<f64>) -> Array1<f64> {
    let (n, j) = x.dim();
    Array1::from_shape_fn(n, |c| {
        let mut s = 0.0;
        for k in 0..j {
            for i in 0..n {
                let t = tau[[c, i, k]];
                if t != 0.0 {
                    s += t * x[[c, k]] * pi[[c, i, k]] / (1.0 + t);
                }
            }
        }
        s
    })
}

/// Per-capita transfer from the global portfolio.
pub fn portfolio_transfer(
    w: &Array1<f64>,
    l: &Array1<f64>,
    r: &Array1<f64>,
    k: &Array1<f64>,
    t_tariff: &Array1<f64>,
    phi: &Array1<f64>,
) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for c in 0..w.len() {
        num += phi[c] * (w[c] * l[c] + r[c] * k[c] + t_tariff[c]);
        den += l[c];
    }
    num / den
}

/// Gross output `Y_n^j = sum_i pi_in X_i / (1 + tau_in)`.
pub fn gross_output(x: &Array2<f64>, pi: &Array3<f64>, tau: &Array3<f64>) -> Array2<f64> {
    let (n, j) = x.dim();
    Array2::from_shape_fn((n, j), |(c, k)| {
        let mut s = 0.0;
        for i in 0..n {
            s += pi[[i, c, k]] * x[[i, k]] / (1.0 + tau[[i, c, k]]);
        }
        s
    })
}

/// Right-hand side of the spending equation:
/// `omega E + g_K P^K I + sum_j' (1 - gamma^j') g^{j',j} Y^j'`.
///
/// `pk_inv` is nominal investment `P^K I`; `g_io` is `[n, using j', input j]`.
pub fn spending_rhs(
    omega: &Array2<f64>,
    e: &Array1<f64>,
    g_k: &Array2<f64>,
    pk_inv: &Array1<f64>,
    gamma: &Array2<f64>,
    g_io: &Array3<f64>,
    y: &Array2<f64>,
) -> Array2<f64> {
    let (n, j) = omega.dim();
    Array2::from_shape_fn((n, j), |(c, k)| {
        let mut s = omega[[c, k]] * e[c] + g_k[[c, k]] * pk_inv[c];
        for u in 0..j {
            s += (1.0 - gamma[[c, u]]) * g_io[[c, u, k]] * y[[c, u]];
        }
        s
    })
}

/// Sectoral value-added shares `gamma Y / sum gamma Y`.
pub fn value_added_shares(gamma: &Array2<f64>, y: &Array2<f64>) -> Array2<f64> {
    let va = gamma * y;
    let mut out = va.clone();
    for (mut row, src) in out.rows_mut().into_iter().zip(va.rows()) {
        let tot: f64 = src.sum();
        row.mapv_inplace(|v| v / tot);
    }
    out
}

/// Trade deficits: tariff-exclusive imports minus exports.
pub fn trade_deficit(x: &Array2<f64>, pi: &Array3<f64>, tau: &Array3<f64>) -> Array1<f64> {
    let (n, j) = x.dim();
    let mut imports = Array1::<f64>::zeros(n);
    let mut exports = Array1::<f64>::zeros(n);
    for c in 0..n {
        for i in 0..n {
            if i == c {
                continue;
            }
            for k in 0..j {
                let flow = x[[c, k]] * pi[[c, i, k]] / (1.0 + tau[[c, i, k]]);
                imports[c] += flow;
                exports[i] += flow;
            }
        }
    }
    imports - exports
}

/// Deficits implied by portfolio payments:
/// `D_n = L_n T^P - phi_n (w L + r K + T)`.
pub fn portfolio_deficit(
    w: &Array1<f64>,
    l: &Array1<f64>,
    r: &Array1<f64>,
    k: &Array1<f64>,
    t_tariff: &Array1<f64>,
    phi: &Array1<f64>,
    tp: f64,
) -> Array1<f64> {
    Array1::from_shape_fn(w.len(), |c| l[c] * tp - phi[c] * (w[c] * l[c] + r[c] * k[c] + t_tariff[c]))
}
