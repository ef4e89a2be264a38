//! Poisson pseudo-maximum-likelihood with importer and exporter fixed
//! effects.
//!
//! Each IRLS step is a weighted least-squares problem. The two sets of
//! fixed effects are swept out of the working response and the covariates by
//! alternating weighted demeaning, the covariate coefficients come from the
//! small normal equations that remain, and the fixed-effect part of the
//! linear predictor is whatever the demeaning removed.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpmlSettings {
    /// Relative deviance change at which IRLS stops.
    pub deviance_tol: f64,
    /// The linear predictor must also have settled to this absolute change.
    pub eta_tol: f64,
    pub max_iter: usize,
    /// Tolerance of the alternating projections.
    pub demean_tol: f64,
    pub demean_max_iter: usize,
}

impl Default for PpmlSettings {
    fn default() -> Self {
        Self { deviance_tol: 1e-8, eta_tol: 1e-12, max_iter: 500, demean_tol: 1e-14, demean_max_iter: 100_000 }
    }
}

/// One cross-section of bilateral observations.
#[derive(Debug, Clone)]
pub struct PpmlData<'a> {
    pub y: &'a [f64],
    pub importer: &'a [usize],
    pub exporter: &'a [usize],
    /// Covariate columns, each of length `y.len()`.
    pub x: &'a [Vec<f64>],
    pub names: &'a [String],
    pub groups: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpmlFit {
    pub beta: Vec<f64>,
    /// Importer effects, normalized to zero for `reference`.
    pub importer_fe: Vec<f64>,
    pub exporter_fe: Vec<f64>,
    pub deviance: f64,
    pub iterations: usize,
    /// Fitted linear predictor per observation.
    pub eta: Vec<f64>,
}

fn demean(v: &mut [f64], w: &[f64], imp: &[usize], exp: &[usize], groups: usize, s: &PpmlSettings) -> Result<()> {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let mut num = vec![0.0; groups];
    let mut den = vec![0.0; groups];
    for _ in 0..s.demean_max_iter {
        let mut change = 0.0f64;
        for ids in [imp, exp] {
            num.iter_mut().for_each(|x| *x = 0.0);
            den.iter_mut().for_each(|x| *x = 0.0);
            for k in 0..v.len() {
                num[ids[k]] += w[k] * v[k];
                den[ids[k]] += w[k];
            }
            for k in 0..v.len() {
                let m = num[ids[k]] / den[ids[k]];
                v[k] -= m;
                change = change.max(m.abs());
            }
        }
        if change <= s.demean_tol * scale {
            return Ok(());
        }
    }
    Err(Error::NonConvergence {
        solver: "fixed-effect demeaning",
        iterations: s.demean_max_iter,
        residual: f64::NAN,
        context: "the bilateral graph may be disconnected".into(),
    })
}

/// Cholesky solve of the normal equations; a vanishing pivot identifies the
/// first covariate that is collinear with the fixed effects or with the
/// covariates before it.
fn solve_normal(g: &[Vec<f64>], rhs: &[f64], names: &[String]) -> Result<Vec<f64>> {
    let k = rhs.len();
    let mut l = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = g[i][j];
            for m in 0..j {
                s -= l[i][m] * l[j][m];
            }
            if i == j {
                if !(s > 1e-10 * g[i][i].max(1e-300)) {
                    return Err(Error::Estimation(format!(
                        "covariate '{}' is collinear with the importer/exporter fixed effects or earlier covariates",
                        names[i]
                    )));
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut z = vec![0.0; k];
    for i in 0..k {
        let mut s = rhs[i];
        for m in 0..i {
            s -= l[i][m] * z[m];
        }
        z[i] = s / l[i][i];
    }
    let mut b = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = z[i];
        for m in i + 1..k {
            s -= l[m][i] * b[m];
        }
        b[i] = s / l[i][i];
    }
    Ok(b)
}

fn deviance(y: &[f64], mu: &[f64]) -> f64 {
    2.0 * y
        .iter()
        .zip(mu)
        .map(|(&y, &m)| if y > 0.0 { y * (y / m).ln() - (y - m) } else { m })
        .sum::<f64>()
}

/// Split the fixed-effect part of the predictor into importer and exporter
/// effects. The reference importer effect is zero; with two groups the
/// reference exporter effect is zero as well, since the split is otherwise
/// not identified.
fn split_effects(fe: &[f64], imp: &[usize], exp: &[usize], groups: usize, reference: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; groups];
    let mut b = vec![0.0; groups];
    if groups == 2 {
        for k in 0..fe.len() {
            if imp[k] == reference {
                b[exp[k]] = fe[k];
            } else {
                a[imp[k]] = fe[k];
            }
        }
        return (a, b);
    }
    // Alternating least squares on an exactly additive target.
    for _ in 0..10_000 {
        let mut change = 0.0f64;
        let mut sum = vec![0.0; groups];
        let mut cnt = vec![0.0; groups];
        for k in 0..fe.len() {
            sum[exp[k]] += fe[k] - a[imp[k]];
            cnt[exp[k]] += 1.0;
        }
        for g in 0..groups {
            let v = sum[g] / cnt[g];
            change = change.max((v - b[g]).abs());
            b[g] = v;
        }
        sum.iter_mut().for_each(|x| *x = 0.0);
        cnt.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..fe.len() {
            sum[imp[k]] += fe[k] - b[exp[k]];
            cnt[imp[k]] += 1.0;
        }
        for g in 0..groups {
            let v = sum[g] / cnt[g];
            change = change.max((v - a[g]).abs());
            a[g] = v;
        }
        if change < 1e-15 {
            break;
        }
    }
    let shift = a[reference];
    a.iter_mut().for_each(|x| *x -= shift);
    b.iter_mut().for_each(|x| *x += shift);
    (a, b)
}

/// Fit `E[y] = exp(a_importer + b_exporter + x'beta)`.
pub fn fit(data: &PpmlData, reference: usize, s: &PpmlSettings) -> Result<PpmlFit> {
    let m = data.y.len();
    let g = data.groups;
    if data.importer.len() != m || data.exporter.len() != m || data.x.iter().any(|c| c.len() != m) {
        return Err(Error::validation("PPML inputs have inconsistent lengths"));
    }
    if data.y.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Estimation("dependent variable must be non-negative and finite".into()));
    }
    for (label, ids) in [("importer", data.importer), ("exporter", data.exporter)] {
        let mut pos = vec![false; g];
        let mut any = vec![false; g];
        for k in 0..m {
            any[ids[k]] = true;
            if data.y[k] > 0.0 {
                pos[ids[k]] = true;
            }
        }
        if let Some(bad) = (0..g).find(|&q| any[q] && !pos[q]) {
            return Err(Error::Estimation(format!("separation: {label} {bad} has no positive flows")));
        }
        if let Some(bad) = (0..g).find(|&q| !any[q]) {
            return Err(Error::Estimation(format!("{label} {bad} has no observations")));
        }
    }
    let kx = data.x.len();
    let ybar = data.y.iter().sum::<f64>() / m as f64;
    let mut mu: Vec<f64> = data.y.iter().map(|&y| 0.5 * (y + ybar)).collect();
    let mut eta: Vec<f64> = mu.iter().map(|v| v.ln()).collect();
    let mut dev = deviance(data.y, &mu);
    let mut beta = vec![0.0; kx];
    let mut fe = vec![0.0; m];
    for it in 1..=s.max_iter {
        let w = mu.clone();
        let z: Vec<f64> = (0..m).map(|k| eta[k] + (data.y[k] - mu[k]) / mu[k]).collect();
        let mut zt = z.clone();
        demean(&mut zt, &w, data.importer, data.exporter, g, s)?;
        let mut xt: Vec<Vec<f64>> = data.x.to_vec();
        for col in xt.iter_mut() {
            demean(col, &w, data.importer, data.exporter, g, s)?;
        }
        let gram: Vec<Vec<f64>> = (0..kx)
            .map(|a| (0..kx).map(|b| (0..m).map(|k| w[k] * xt[a][k] * xt[b][k]).sum()).collect())
            .collect();
        let rhs: Vec<f64> = (0..kx).map(|a| (0..m).map(|k| w[k] * xt[a][k] * zt[k]).sum()).collect();
        beta = if kx > 0 { solve_normal(&gram, &rhs, data.names)? } else { Vec::new() };
        let mut max_d_eta = 0.0f64;
        for k in 0..m {
            let mut xb = 0.0;
            let mut xtb = 0.0;
            for a in 0..kx {
                xb += data.x[a][k] * beta[a];
                xtb += xt[a][k] * beta[a];
            }
            fe[k] = (z[k] - zt[k]) - (xb - xtb);
            let e = xb + fe[k];
            max_d_eta = max_d_eta.max((e - eta[k]).abs());
            eta[k] = e;
            mu[k] = e.exp();
        }
        let new_dev = deviance(data.y, &mu);
        let rel = (new_dev - dev).abs() / (0.1 + new_dev.abs());
        dev = new_dev;
        if rel < s.deviance_tol && max_d_eta < s.eta_tol {
            let (a, b) = split_effects(&fe, data.importer, data.exporter, g, reference);
            return Ok(PpmlFit { beta, importer_fe: a, exporter_fe: b, deviance: dev, iterations: it, eta });
        }
    }
    Err(Error::NonConvergence { solver: "PPML", iterations: s.max_iter, residual: dev, context: String::new() })
}
