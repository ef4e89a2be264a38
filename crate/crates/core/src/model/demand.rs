//! Consumption side: the implicit aggregator, its expenditure function and
//! sectoral expenditure shares.

use crate::config::PreferenceFamily;
use crate::error::{Error, Result};
use crate::num::{bisect, log_sum_exp_weighted};

/// Preference parameters needed to evaluate demand in one country.
#[derive(Debug, Clone, Copy)]
pub struct Preferences<'a> {
    pub epsilon: &'a [f64],
    pub sigma: f64,
    pub family: PreferenceFamily,
}

impl<'a> Preferences<'a> {
    pub fn new(epsilon: &'a [f64], sigma: f64, family: PreferenceFamily) -> Self {
        Self { epsilon, sigma, family }
    }

    fn cobb_douglas(&self) -> bool {
        self.family == PreferenceFamily::CobbDouglas || self.sigma == 1.0
    }

    fn exponents(&self, j: usize) -> f64 {
        if self.family == PreferenceFamily::NonhomotheticCes {
            self.epsilon[j]
        } else {
            1.0
        }
    }
}

/// Solver settings for [`newton_consumption`].
#[derive(Debug, Clone, Copy)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol: 1e-13, max_iter: 100 }
    }
}

fn check_inputs(e: f64, l: f64, p: &[f64], omega: &[f64], prefs: &Preferences) -> Result<()> {
    if !(e > 0.0 && l > 0.0) || !e.is_finite() || !l.is_finite() {
        return Err(Error::domain("newton_consumption", format!("E={e}, L={l} must be positive")));
    }
    if p.len() != omega.len() || p.len() != prefs.epsilon.len() {
        return Err(Error::domain("newton_consumption", "sector dimensions disagree"));
    }
    if p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::domain("newton_consumption", "prices must be positive"));
    }
    if omega.iter().any(|&x| x < 0.0) || !omega.iter().any(|&x| x > 0.0) {
        return Err(Error::domain("newton_consumption", "Omega must be non-negative with a positive entry"));
    }
    Ok(())
}

/// Log of the CES price index `[sum Omega P^(1-sigma)]^(1/(1-sigma))`, or the
/// weighted geometric mean under Cobb-Douglas.
pub fn log_aggregate_price(p: &[f64], omega: &[f64], prefs: &Preferences) -> f64 {
    if prefs.cobb_douglas() {
        let tot: f64 = omega.iter().sum();
        omega.iter().zip(p).map(|(w, x)| w / tot * x.ln()).sum()
    } else {
        let s = 1.0 - prefs.sigma;
        let z: Vec<f64> = p.iter().map(|x| s * x.ln()).collect();
        log_sum_exp_weighted(omega, &z) / s
    }
}

/// Log residual of the expenditure function at `x = ln C`:
/// `ln sum Omega ((C/L)^eps P)^(1-sigma) - (1-sigma) ln(E/L)`.
/// Also returns its derivative `(1-sigma) eps_bar`.
fn log_residual(x: f64, e: f64, l: f64, p: &[f64], omega: &[f64], prefs: &Preferences) -> (f64, f64) {
    let s = 1.0 - prefs.sigma;
    let lc = x - l.ln();
    let z: Vec<f64> = (0..p.len()).map(|j| s * (prefs.exponents(j) * lc + p[j].ln())).collect();
    let lse = log_sum_exp_weighted(omega, &z);
    let mut deriv = 0.0;
    for j in 0..p.len() {
        if omega[j] > 0.0 {
            deriv += omega[j] * (z[j] - lse).exp() * prefs.exponents(j);
        }
    }
    (lse - s * (e / l).ln(), s * deriv)
}

/// Aggregate consumption `C` implied by expenditure `E` at prices `P`.
///
/// Newton iterations run on `ln C`, starting from the homothetic closed form;
/// if Newton stalls, a bracketed bisection on the monotone residual takes
/// over. Cobb-Douglas has the closed form `C = E / prod P^Omega`.
pub fn newton_consumption(
    e: f64,
    l: f64,
    p: &[f64],
    omega: &[f64],
    prefs: &Preferences,
    settings: NewtonSettings,
) -> Result<f64> {
    check_inputs(e, l, p, omega, prefs)?;
    if prefs.cobb_douglas() {
        return Ok((e.ln() - log_aggregate_price(p, omega, prefs)).exp());
    }
    let mut x = e.ln() - log_aggregate_price(p, omega, prefs);
    let mut last = f64::INFINITY;
    for _ in 0..settings.max_iter {
        let (f, df) = log_residual(x, e, l, p, omega, prefs);
        last = f.abs();
        if last <= settings.tol {
            return Ok(x.exp());
        }
        if !(df > 0.0) || !f.is_finite() {
            break;
        }
        let step = f / df;
        // Keep steps bounded so that a poor start cannot overflow exp().
        x -= step.clamp(-20.0, 20.0);
    }
    // Fallback: expand a bracket around the current iterate and bisect.
    let mut lo = x - 1.0;
    let mut hi = x + 1.0;
    let f = |y: f64| log_residual(y, e, l, p, omega, prefs).0;
    let mut k = 0;
    while f(lo) > 0.0 && k < 200 {
        lo -= 2f64.powi(k.min(10));
        k += 1;
    }
    k = 0;
    while f(hi) < 0.0 && k < 200 {
        hi += 2f64.powi(k.min(10));
        k += 1;
    }
    match bisect(f, lo, hi, 1e-15, 400) {
        Some(root) if f(root).abs() <= settings.tol.max(1e-12) => Ok(root.exp()),
        _ => Err(Error::NonConvergence {
            solver: "newton_consumption",
            iterations: settings.max_iter,
            residual: last,
            context: format!("E={e}, L={l}"),
        }),
    }
}

/// Sectoral expenditure shares and the share-weighted income exponent.
pub fn expenditure_shares(c: f64, l: f64, p: &[f64], omega: &[f64], prefs: &Preferences) -> (Vec<f64>, f64) {
    let jn = p.len();
    let shares: Vec<f64> = if prefs.cobb_douglas() {
        let tot: f64 = omega.iter().sum();
        omega.iter().map(|w| w / tot).collect()
    } else {
        let s = 1.0 - prefs.sigma;
        let lc = (c / l).ln();
        let z: Vec<f64> = (0..jn).map(|j| s * (prefs.exponents(j) * lc + p[j].ln())).collect();
        let lse = log_sum_exp_weighted(omega, &z);
        (0..jn).map(|j| if omega[j] > 0.0 { omega[j] * (z[j] - lse).exp() } else { 0.0 }).collect()
    };
    let eps_bar = shares.iter().enumerate().map(|(j, w)| w * prefs.exponents(j)).sum();
    (shares, eps_bar)
}

/// Hicksian sectoral quantities `C^j = omega^j E / P^j`.
pub fn sectoral_quantities(e: f64, p: &[f64], shares: &[f64]) -> Vec<f64> {
    shares.iter().zip(p).map(|(w, x)| w * e / x).collect()
}

/// Expenditure needed to reach `C` at prices `P` (the forward map of
/// [`newton_consumption`]).
pub fn expenditure(c: f64, l: f64, p: &[f64], omega: &[f64], prefs: &Preferences) -> f64 {
    if prefs.cobb_douglas() {
        return c * log_aggregate_price(p, omega, prefs).exp();
    }
    let s = 1.0 - prefs.sigma;
    let lc = (c / l).ln();
    let z: Vec<f64> = (0..p.len()).map(|j| s * (prefs.exponents(j) * lc + p[j].ln())).collect();
    l * (log_sum_exp_weighted(omega, &z) / s).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    const NH: PreferenceFamily = PreferenceFamily::NonhomotheticCes;

    fn eps() -> [f64; 3] {
        [0.05, 1.0, 1.2]
    }

    #[test]
    fn one_sector_gives_e_over_p() {
        let prefs = Preferences::new(&[1.0], 0.5, PreferenceFamily::HomotheticCes);
        let c = newton_consumption(6.0, 2.0, &[3.0], &[1.0], &prefs, NewtonSettings::default()).unwrap();
        assert!((c - 2.0).abs() < 1e-14);
    }

    #[test]
    fn homothetic_matches_closed_form() {
        let prefs = Preferences::new(&[1.0, 1.0, 1.0], 0.5, PreferenceFamily::HomotheticCes);
        let p = [1.3, 0.7, 2.2];
        let om = [0.2, 0.5, 0.3];
        let pbar = om.iter().zip(&p).map(|(w, x): (&f64, &f64)| w * x.powf(0.5)).sum::<f64>().powf(2.0);
        let c = newton_consumption(5.0, 1.5, &p, &om, &prefs, NewtonSettings::default()).unwrap();
        assert!((c - 5.0 / pbar).abs() < 1e-12 * c);
    }

    #[test]
    fn nonhomothetic_matches_bisection() {
        // sum (1/3) (C/L)^(eps/2) = 2^(1/2) at unit prices, E/L = 2.
        let e = eps();
        let prefs = Preferences::new(&e, 0.5, NH);
        let om = [1.0 / 3.0; 3];
        let c = newton_consumption(2.0, 1.0, &[1.0; 3], &om, &prefs, NewtonSettings::default()).unwrap();
        let g = |x: f64| e.iter().map(|ej| x.powf(ej / 2.0) / 3.0).sum::<f64>() - 2f64.sqrt();
        let oracle = bisect(g, 1e-6, 100.0, 1e-15, 500).unwrap();
        assert!((c - oracle).abs() < 1e-10 * oracle);
    }

    #[test]
    fn expenditure_round_trip_and_adding_up() {
        let e = eps();
        let prefs = Preferences::new(&e, 0.5, NH);
        let p = [0.9, 1.4, 1.1];
        let om = [0.3, 0.3, 0.4];
        let c = newton_consumption(7.0, 2.0, &p, &om, &prefs, NewtonSettings::default()).unwrap();
        assert!((expenditure(c, 2.0, &p, &om, &prefs) - 7.0).abs() < 1e-11);
        let (w, _) = expenditure_shares(c, 2.0, &p, &om, &prefs);
        let q = sectoral_quantities(7.0, &p, &w);
        let spend: f64 = q.iter().zip(&p).map(|(a, b)| a * b).sum();
        assert!((spend - 7.0).abs() < 1e-10);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cobb_douglas_shares_are_weights() {
        let e = [1.0; 3];
        let prefs = Preferences::new(&e, 0.5, PreferenceFamily::CobbDouglas);
        let (w, eb) = expenditure_shares(3.0, 1.0, &[5.0, 1.0, 0.2], &[2.0, 1.0, 1.0], &prefs);
        assert_eq!(w, vec![0.5, 0.25, 0.25]);
        assert_eq!(eb, 1.0);
    }

    #[test]
    fn homothetic_equal_weights_uniform_shares() {
        let e = [1.0; 3];
        let prefs = Preferences::new(&e, 0.5, PreferenceFamily::HomotheticCes);
        let (w, eb) = expenditure_shares(3.0, 1.0, &[1.0; 3], &[1.0 / 3.0; 3], &prefs);
        for x in w {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((eb - 1.0).abs() < 1e-15);
    }

    #[test]
    fn richer_households_spend_more_on_luxury() {
        let e = eps();
        let prefs = Preferences::new(&e, 0.5, NH);
        let p = [1.0, 1.0, 1.0];
        let om = [1.0 / 3.0; 3];
        let (w1, _) = expenditure_shares(1.0, 1.0, &p, &om, &prefs);
        let (w2, _) = expenditure_shares(1.0 + 1e-4, 1.0, &p, &om, &prefs);
        assert!(w2[2] > w1[2]);
        assert!(w2[0] < w1[0]);
    }

    #[test]
    fn hicksian_demand_falls_in_own_price() {
        let e = eps();
        let prefs = Preferences::new(&e, 0.5, NH);
        let om = [0.3, 0.3, 0.4];
        let c = 2.0;
        let p0 = [1.0, 1.0, 1.0];
        let p1 = [1.0, 1.05, 1.0];
        let q = |p: &[f64]| {
            let (w, _) = expenditure_shares(c, 1.0, p, &om, &prefs);
            let ex = expenditure(c, 1.0, p, &om, &prefs);
            sectoral_quantities(ex, p, &w)
        };
        assert!(q(&p1)[1] < q(&p0)[1]);
    }

    #[test]
    fn rejects_bad_domain() {
        let e = eps();
        let prefs = Preferences::new(&e, 0.5, NH);
        assert!(newton_consumption(-1.0, 1.0, &[1.0; 3], &[1.0; 3], &prefs, NewtonSettings::default()).is_err());
        assert!(newton_consumption(1.0, 1.0, &[1.0; 3], &[0.0; 3], &prefs, NewtonSettings::default()).is_err());
    }
}
