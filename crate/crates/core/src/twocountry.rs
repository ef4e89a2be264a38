//! Two-country, labor-only economy with `J` sectors that differ only in
//! their income elasticities.
//!
//! Home is country 0 and Foreign country 1; Foreign's wage is the
//! numeraire. The module solves the equilibrium at any tariff vector and
//! provides closed forms for the uniform-tariff case (equilibrium wage,
//! welfare index, optimal tariff) plus finite-difference decompositions of
//! expenditure-share and value-added responses to a tariff change.

use std::path::Path;

use crate::config::PreferenceFamily;
use crate::error::{Error, Result};
use crate::model::demand::{expenditure_shares, newton_consumption, NewtonSettings, Preferences};
use crate::num::bisect;

pub const HOME: usize = 0;
pub const FOREIGN: usize = 1;

/// Central-difference step on the tariff.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoCountryInstance {
    pub a_h: f64,
    pub a_f: f64,
    pub l_h: f64,
    pub l_f: f64,
    pub d_hf: f64,
    pub d_fh: f64,
    /// Home's tariffs on Foreign goods, by sector.
    pub tau_hf: Vec<f64>,
    /// Foreign's tariffs on Home goods, by sector.
    pub tau_fh: Vec<f64>,
    pub theta: f64,
    pub sigma: f64,
    pub epsilon: Vec<f64>,
    pub family: PreferenceFamily,
}

impl TwoCountryInstance {
    /// Symmetric countries, zero tariffs, `d = 1.5`.
    pub fn symmetric(epsilon: Vec<f64>, theta: f64, sigma: f64, family: PreferenceFamily) -> Self {
        let j = epsilon.len();
        let mut s = Self {
            a_h: 1.0,
            a_f: 1.0,
            l_h: 1.0,
            l_f: 1.0,
            d_hf: 1.5,
            d_fh: 1.5,
            tau_hf: vec![0.0; j],
            tau_fh: vec![0.0; j],
            theta,
            sigma,
            epsilon,
            family,
        };
        if family != PreferenceFamily::NonhomotheticCes {
            s.epsilon = vec![1.0; j];
        }
        s
    }

    pub fn sectors(&self) -> usize {
        self.epsilon.len()
    }

    /// Same instance under another preference family; the income exponents
    /// are set to one outside the nonhomothetic family.
    pub fn with_family(&self, family: PreferenceFamily, epsilon_nh: &[f64]) -> Self {
        let mut s = self.clone();
        s.family = family;
        s.epsilon = if family == PreferenceFamily::NonhomotheticCes { epsilon_nh.to_vec() } else { vec![1.0; self.sectors()] };
        s
    }

    /// Set Home's tariff to `tau` in every sector.
    pub fn with_uniform_tariff(&self, tau: f64) -> Self {
        let mut s = self.clone();
        s.tau_hf = vec![tau; self.sectors()];
        s
    }

    /// Home's tariffs moved by `h * direction`.
    pub fn shifted(&self, direction: &[f64], h: f64) -> Self {
        let mut s = self.clone();
        for (t, d) in s.tau_hf.iter_mut().zip(direction) {
            *t += h * d;
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.sectors();
        if j == 0 || self.tau_hf.len() != j || self.tau_fh.len() != j {
            return Err(Error::validation("tariff vectors must have one entry per sector"));
        }
        for (name, v) in [("A_H", self.a_h), ("A_F", self.a_f), ("L_H", self.l_h), ("L_F", self.l_f), ("d_HF", self.d_hf), ("d_FH", self.d_fh), ("theta", self.theta), ("sigma", self.sigma)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        if self.tau_hf.iter().chain(&self.tau_fh).any(|&t| !(t > -1.0)) {
            return Err(Error::validation("tariffs must exceed -1"));
        }
        match self.family {
            PreferenceFamily::NonhomotheticCes => {
                if self.epsilon.windows(2).any(|w| w[0] > w[1]) || self.epsilon.iter().any(|&e| !(e > 0.0)) {
                    return Err(Error::validation("income elasticities must be positive and sorted ascending"));
                }
                if !self.epsilon.iter().any(|&e| (e - 1.0).abs() < 1e-12) {
                    return Err(Error::validation("one sector must have unit income elasticity"));
                }
            }
            _ => {
                if self.epsilon.iter().any(|&e| e != 1.0) {
                    return Err(Error::validation("homothetic families require unit income elasticities"));
                }
            }
        }
        if self.family != PreferenceFamily::CobbDouglas && self.sigma == 1.0 {
            return Err(Error::validation("sigma = 1 is the Cobb-Douglas family"));
        }
        Ok(())
    }

    fn uniform(v: &[f64]) -> Option<f64> {
        let first = v[0];
        v.iter().all(|&x| x == first).then_some(first)
    }

    /// `(tau_HF, tau_FH)` when both tariff vectors are flat across sectors.
    pub fn uniform_tariffs(&self) -> Option<(f64, f64)> {
        Some((Self::uniform(&self.tau_hf)?, Self::uniform(&self.tau_fh)?))
    }

    fn prefs(&self) -> Preferences<'_> {
        Preferences::new(&self.epsilon, self.sigma, self.family)
    }
}

/// Equilibrium objects at a given relative wage. Arrays are indexed
/// `[country][sector]`; shares of labor income are relative to `w_n L_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoCountryEq {
    pub w: f64,
    pub p: [Vec<f64>; 2],
    /// Import share of the partner in each country.
    pub pi_import: [Vec<f64>; 2],
    pub e: [f64; 2],
    /// Real per-capita consumption.
    pub u: [f64; 2],
    pub omega: [Vec<f64>; 2],
    pub eps_bar: [f64; 2],
    /// Tariff revenue over labor income.
    pub mu: [f64; 2],
    pub va: [Vec<f64>; 2],
    /// Net exports (tariff-exclusive) over labor income.
    pub nx: [Vec<f64>; 2],
    /// Sectoral tariff revenue over labor income.
    pub rev: [Vec<f64>; 2],
    /// Home imports minus Home exports.
    pub trade_gap: f64,
}

const NEWTON: NewtonSettings = NewtonSettings { tol: 1e-14, max_iter: 200 };

/// Evaluate the economy at relative wage `w = w_H / w_F`.
pub fn evaluate(inst: &TwoCountryInstance, w: f64) -> Result<TwoCountryEq> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::domain("twocountry::evaluate", format!("wage must be positive, got {w}")));
    }
    let j = inst.sectors();
    let wages = [w, 1.0];
    let a = [inst.a_h, inst.a_f];
    let l = [inst.l_h, inst.l_f];
    let d = [inst.d_hf, inst.d_fh];
    let tau = [&inst.tau_hf, &inst.tau_fh];
    let th = inst.theta;
    let mut p = [vec![0.0; j], vec![0.0; j]];
    let mut pi = [vec![0.0; j], vec![0.0; j]];
    for n in 0..2 {
        let i = 1 - n;
        for s in 0..j {
            let own = (wages[n] / a[n]).powf(-th);
            let imp = (wages[i] * d[n] * (1.0 + tau[n][s]) / a[i]).powf(-th);
            p[n][s] = (own + imp).powf(-1.0 / th);
            pi[n][s] = imp / (own + imp);
        }
    }
    let prefs = inst.prefs();
    let ones = vec![1.0; j];
    let mut e = [0.0; 2];
    let mut u = [0.0; 2];
    let mut omega = [vec![0.0; j], vec![0.0; j]];
    let mut eps_bar = [0.0; 2];
    for n in 0..2 {
        let s_rev: Vec<f64> = (0..j).map(|s| tau[n][s] * pi[n][s] / (1.0 + tau[n][s])).collect();
        let labor = wages[n] * l[n];
        let mut en = labor;
        let mut c = 0.0;
        let mut sh = vec![1.0 / j as f64; j];
        let mut eb = 1.0;
        for _ in 0..500 {
            c = newton_consumption(en, l[n], &p[n], &ones, &prefs, NEWTON)?;
            let (shares, ebar) = expenditure_shares(c, l[n], &p[n], &ones, &prefs);
            sh = shares;
            eb = ebar;
            let keep: f64 = 1.0 - sh.iter().zip(&s_rev).map(|(o, s)| o * s).sum::<f64>();
            if !(keep > 0.0) {
                return Err(Error::domain("twocountry::evaluate", "tariff revenue exceeds expenditure"));
            }
            let next = labor / keep;
            let done = ((next - en) / en).abs() < 1e-15;
            en = next;
            if done {
                break;
            }
        }
        e[n] = en;
        u[n] = c / l[n];
        omega[n] = sh;
        eps_bar[n] = eb;
    }
    let mut mu = [0.0; 2];
    let mut va = [vec![0.0; j], vec![0.0; j]];
    let mut nx = [vec![0.0; j], vec![0.0; j]];
    let mut rev = [vec![0.0; j], vec![0.0; j]];
    let imports = |n: usize, s: usize| pi[n][s] * omega[n][s] * e[n] / (1.0 + tau[n][s]);
    for n in 0..2 {
        let i = 1 - n;
        let labor = wages[n] * l[n];
        mu[n] = e[n] / labor - 1.0;
        for s in 0..j {
            let x = omega[n][s] * e[n];
            let im = imports(n, s);
            let ex = imports(i, s);
            va[n][s] = ((1.0 - pi[n][s]) * x + ex) / labor;
            nx[n][s] = (ex - im) / labor;
            rev[n][s] = tau[n][s] * im / labor;
        }
    }
    let gap: f64 = (0..j).map(|s| imports(HOME, s) - imports(FOREIGN, s)).sum();
    Ok(TwoCountryEq { w, p, pi_import: pi, e, u, omega, eps_bar, mu, va, nx, rev, trade_gap: gap })
}

/// Right-hand side of the relative-labor-supply equation under uniform
/// tariffs: `pi_FH (1 + tau_HF pi_HH) / (w pi_HF (1 + tau_FH pi_FF))`.
pub fn labor_supply_rhs(inst: &TwoCountryInstance, w: f64) -> Result<f64> {
    let (t_hf, t_fh) = inst
        .uniform_tariffs()
        .ok_or_else(|| Error::validation("the closed-form wage equation needs sector-uniform tariffs"))?;
    let th = inst.theta;
    let a = inst.a_h / inst.a_f;
    let b_hf = inst.d_hf * (1.0 + t_hf);
    let b_fh = inst.d_fh * (1.0 + t_fh);
    let pi_hf = (w / b_hf).powf(th) / ((w / b_hf).powf(th) + a.powf(th));
    let pi_fh = (a / b_fh).powf(th) / (w.powf(th) + (a / b_fh).powf(th));
    Ok(pi_fh * (1.0 + t_hf * (1.0 - pi_hf)) / (w * pi_hf * (1.0 + t_fh * (1.0 - pi_fh))))
}

fn expand_bracket<F: FnMut(f64) -> f64>(f: &mut F) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (-1.0, 1.0);
    for _ in 0..60 {
        let (a, b) = (f(lo), f(hi));
        if a.is_finite() && b.is_finite() && a.signum() != b.signum() {
            return Some((lo, hi));
        }
        lo *= 1.5;
        hi *= 1.5;
        if hi > 700.0 {
            break;
        }
    }
    None
}

/// Bisection in `ln w` followed by secant polishing.
fn root_in_log<F: FnMut(f64) -> f64>(mut f: F, what: &'static str) -> Result<f64> {
    let (lo, hi) = expand_bracket(&mut f).ok_or_else(|| Error::NonConvergence {
        solver: what,
        iterations: 60,
        residual: f64::NAN,
        context: "failed to bracket the wage; check the instance".into(),
    })?;
    let mut x = bisect(&mut f, lo, hi, 1e-13, 200).ok_or_else(|| Error::NonConvergence {
        solver: what,
        iterations: 200,
        residual: f64::NAN,
        context: "bisection failed".into(),
    })?;
    let mut fx = f(x);
    let mut x1 = x + 1e-9;
    let mut f1 = f(x1);
    for _ in 0..8 {
        if fx == 0.0 || f1 == fx {
            break;
        }
        let x2 = x1 - f1 * (x1 - x) / (f1 - fx);
        if !x2.is_finite() || (x2 - x1).abs() > 1e-8 {
            break;
        }
        x = x1;
        fx = f1;
        x1 = x2;
        f1 = f(x1);
        if (x1 - x).abs() < 1e-16 {
            break;
        }
    }
    let best = if f1.abs() <= fx.abs() { x1 } else { x };
    Ok(best.exp())
}

/// Wage solving the uniform-tariff labor-supply equation.
pub fn closed_form_wage(inst: &TwoCountryInstance) -> Result<f64> {
    inst.validate()?;
    let target = (inst.l_h / inst.l_f).ln();
    let mut err = None;
    let w = root_in_log(
        |lw| match labor_supply_rhs(inst, lw.exp()) {
            Ok(v) => v.ln() - target,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        "two-country wage equation",
    );
    if let Some(e) = err {
        return Err(e);
    }
    w
}

/// Wage clearing the full trade balance at arbitrary tariffs.
pub fn trade_balance_wage(inst: &TwoCountryInstance) -> Result<f64> {
    inst.validate()?;
    root_in_log(
        |lw| match evaluate(inst, lw.exp()) {
            Ok(eq) => {
                let imp: f64 = (0..inst.sectors()).map(|s| eq.pi_import[HOME][s] * eq.omega[HOME][s] * eq.e[HOME] / (1.0 + inst.tau_hf[s])).sum();
                let exp = imp - eq.trade_gap;
                imp.ln() - exp.ln()
            }
            Err(_) => f64::NAN,
        },
        "two-country trade balance",
    )
}

/// Equilibrium relative wage; the closed form is used when tariffs are
/// uniform across sectors.
pub fn equilibrium_wage(inst: &TwoCountryInstance) -> Result<f64> {
    if inst.uniform_tariffs().is_some() {
        closed_form_wage(inst)
    } else {
        trade_balance_wage(inst)
    }
}

pub fn solve(inst: &TwoCountryInstance) -> Result<TwoCountryEq> {
    evaluate(inst, equilibrium_wage(inst)?)
}

/// Welfare indices under uniform tariffs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareIndex {
    pub x_h: f64,
    pub x_f: f64,
    pub u_h: f64,
    pub u_f: f64,
}

/// Real per-capita consumption implied by the index `x`, solving
/// `1 = sum_j x^((sigma-1)/theta) u^(eps_j (1-sigma))`. Cobb-Douglas gives
/// `u = x^(1/theta)`.
pub fn u_of_x(x: f64, theta: f64, sigma: f64, epsilon: &[f64], family: PreferenceFamily) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("u_of_x", "index must be positive"));
    }
    if family == PreferenceFamily::CobbDouglas {
        return Ok(x.powf(1.0 / theta));
    }
    let lx = x.ln();
    let eps: Vec<f64> = if family == PreferenceFamily::NonhomotheticCes { epsilon.to_vec() } else { vec![1.0; epsilon.len()] };
    let f = |v: f64| {
        let z: Vec<f64> = eps.iter().map(|e| (sigma - 1.0) / theta * lx + e * (1.0 - sigma) * v).collect();
        crate::num::log_sum_exp(&z)
    };
    let v0 = lx / theta - (epsilon.len() as f64).ln() / (1.0 - sigma);
    let mut g = |v: f64| f(v0 + v);
    let (lo, hi) = expand_bracket(&mut g).ok_or_else(|| Error::domain("u_of_x", "could not bracket utility"))?;
    let v = bisect(g, lo, hi, 1e-15, 400).ok_or_else(|| Error::domain("u_of_x", "bisection failed"))?;
    Ok((v0 + v).exp())
}

/// Elasticity of `u` with respect to `x`: `1 / (theta eps_bar)`.
pub fn u_elasticity(x: f64, theta: f64, sigma: f64, epsilon: &[f64], family: PreferenceFamily) -> Result<f64> {
    if family != PreferenceFamily::NonhomotheticCes {
        return Ok(1.0 / theta);
    }
    let u = u_of_x(x, theta, sigma, epsilon, family)?;
    let eb: f64 = epsilon
        .iter()
        .map(|e| e * x.powf((sigma - 1.0) / theta) * u.powf(e * (1.0 - sigma)))
        .sum();
    Ok(1.0 / (theta * eb))
}

pub fn welfare_index(inst: &TwoCountryInstance, w: f64) -> Result<WelfareIndex> {
    let (t_hf, t_fh) = inst
        .uniform_tariffs()
        .ok_or_else(|| Error::validation("the welfare index needs sector-uniform tariffs"))?;
    let th = inst.theta;
    let b_hf = inst.d_hf * (1.0 + t_hf);
    let b_fh = inst.d_fh * (1.0 + t_fh);
    let own_h = inst.a_h.powf(th);
    let imp_h = (inst.a_f * w / b_hf).powf(th);
    let own_f = inst.a_f.powf(th);
    let imp_f = (inst.a_h / (w * b_fh)).powf(th);
    let pi_hf = imp_h / (own_h + imp_h);
    let pi_fh = imp_f / (own_f + imp_f);
    let mu_h = t_hf * pi_hf / (1.0 + t_hf * (1.0 - pi_hf));
    let mu_f = t_fh * pi_fh / (1.0 + t_fh * (1.0 - pi_fh));
    let x_h = (1.0 + mu_h).powf(th) * (imp_h + own_h);
    let x_f = (1.0 + mu_f).powf(th) * (own_f + imp_f);
    let u_h = u_of_x(x_h, th, inst.sigma, &inst.epsilon, inst.family)?;
    let u_f = u_of_x(x_f, th, inst.sigma, &inst.epsilon, inst.family)?;
    Ok(WelfareIndex { x_h, x_f, u_h, u_f })
}

/// The optimal uniform tariff from its fixed-point characterization and
/// from direct maximization of Home welfare.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalTariff {
    /// Root of `tau = 1 / (theta pi_FF(tau))`.
    pub fixed_point: f64,
    /// Best point of the search grid.
    pub grid_argmax: f64,
    /// Golden-section refinement around the grid argmax.
    pub refined_argmax: f64,
}

/// Default tariff grid `[0, 2]` with 2001 points.
pub fn default_grid() -> Vec<f64> {
    (0..=2000).map(|k| k as f64 * 1e-3).collect()
}

fn foreign_domestic_share(inst: &TwoCountryInstance, w: f64) -> f64 {
    let a = inst.a_h / inst.a_f;
    let b_fh = inst.d_fh * (1.0 + inst.tau_fh[0]);
    w.powf(inst.theta) / (w.powf(inst.theta) + (a / b_fh).powf(inst.theta))
}

fn home_welfare(inst: &TwoCountryInstance, tau: f64) -> Result<f64> {
    let i = inst.with_uniform_tariff(tau);
    let w = closed_form_wage(&i)?;
    Ok(welfare_index(&i, w)?.u_h)
}

pub fn optimal_tariff(inst: &TwoCountryInstance) -> Result<OptimalTariff> {
    optimal_tariff_on(inst, &default_grid())
}

pub fn optimal_tariff_on(inst: &TwoCountryInstance, grid: &[f64]) -> Result<OptimalTariff> {
    if inst.tau_fh.iter().any(|&t| t != 0.0) {
        return Err(Error::validation("the optimal-tariff formula assumes Foreign sets no tariffs"));
    }
    let f = |tau: f64| -> f64 {
        let i = inst.with_uniform_tariff(tau);
        match closed_form_wage(&i) {
            Ok(w) => tau - 1.0 / (inst.theta * foreign_domestic_share(&i, w)),
            Err(_) => f64::NAN,
        }
    };
    let mut hi = 1.0;
    while f(hi) < 0.0 && hi < 1e6 {
        hi *= 2.0;
    }
    let fixed_point = bisect(f, 0.0, hi, 1e-13, 200)
        .ok_or_else(|| Error::NonConvergence { solver: "optimal tariff fixed point", iterations: 200, residual: f64::NAN, context: String::new() })?;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (k, &t) in grid.iter().enumerate() {
        let u = home_welfare(inst, t)?;
        if u > best.0 {
            best = (u, k);
        }
    }
    let k = best.1;
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(grid.len() - 1)];
    let refined = golden_max(|t| home_welfare(inst, t).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-10);
    Ok(OptimalTariff { fixed_point, grid_argmax: grid[k], refined_argmax: refined })
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Relative-price and income components of the change in one expenditure
/// share, per unit of tariff change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareEffect {
    pub relative_price: f64,
    pub income: f64,
    pub d_ln_omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShareDecomposition {
    pub home: Vec<ShareEffect>,
    /// Last sector whose income elasticity is below Home's share-weighted
    /// average; its share falls through the income channel.
    pub cutoff: Option<usize>,
}

fn central<F: Fn(&TwoCountryEq) -> f64>(up: &TwoCountryEq, dn: &TwoCountryEq, f: F) -> f64 {
    (f(up) - f(dn)) / (2.0 * FD_STEP)
}

fn bump_pair(inst: &TwoCountryInstance, dtau: &[f64]) -> Result<(TwoCountryEq, TwoCountryEq)> {
    if dtau.len() != inst.sectors() {
        return Err(Error::validation("tariff change must have one entry per sector"));
    }
    Ok((solve(&inst.shifted(dtau, FD_STEP))?, solve(&inst.shifted(dtau, -FD_STEP))?))
}

/// Decompose Home's expenditure-share response to the tariff change `dtau`.
pub fn share_decomposition(inst: &TwoCountryInstance, dtau: &[f64]) -> Result<ShareDecomposition> {
    let base = solve(inst)?;
    let (up, dn) = bump_pair(inst, dtau)?;
    let j = inst.sectors();
    let dlp: Vec<f64> = (0..j).map(|s| central(&up, &dn, |e| e.p[HOME][s].ln())).collect();
    let avg: f64 = (0..j).map(|s| base.omega[HOME][s] * dlp[s]).sum();
    let dlu = central(&up, &dn, |e| e.u[HOME].ln());
    let cd = inst.family == PreferenceFamily::CobbDouglas;
    let one_minus_sigma = if cd { 0.0 } else { 1.0 - inst.sigma };
    let home = (0..j)
        .map(|s| ShareEffect {
            relative_price: one_minus_sigma * (dlp[s] - avg),
            income: one_minus_sigma * (inst.epsilon[s] - base.eps_bar[HOME]) * dlu,
            d_ln_omega: central(&up, &dn, |e| e.omega[HOME][s].ln()),
        })
        .collect();
    let cutoff = (0..j).filter(|&s| inst.epsilon[s] < base.eps_bar[HOME]).max();
    Ok(ShareDecomposition { home, cutoff })
}

/// Channels of the value-added share response per unit of tariff change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaEffect {
    /// Expenditure adjusted by tariff revenue.
    pub expenditure: f64,
    pub net_exports: f64,
    pub tariff_revenue: f64,
    pub d_ln_va: f64,
    pub d_ln_omega: f64,
}

/// Decompose both countries' value-added share responses. Uses the identity
/// `va = omega (1 + mu) + NX/(wL) - T^j/(wL)`.
pub fn value_added_decomposition(inst: &TwoCountryInstance, dtau: &[f64]) -> Result<[Vec<VaEffect>; 2]> {
    let base = solve(inst)?;
    let (up, dn) = bump_pair(inst, dtau)?;
    let j = inst.sectors();
    let mk = |n: usize| -> Vec<VaEffect> {
        (0..j)
            .map(|s| {
                let va = base.va[n][s];
                VaEffect {
                    expenditure: central(&up, &dn, |e| e.omega[n][s] * (1.0 + e.mu[n])) / va,
                    net_exports: central(&up, &dn, |e| e.nx[n][s]) / va,
                    tariff_revenue: -central(&up, &dn, |e| e.rev[n][s]) / va,
                    d_ln_va: central(&up, &dn, |e| e.va[n][s].ln()),
                    d_ln_omega: central(&up, &dn, |e| e.omega[n][s].ln()),
                }
            })
            .collect()
    };
    Ok([mk(HOME), mk(FOREIGN)])
}

/// Ratio of the tariff semi-elasticity of Home consumption under the
/// instance's preferences to that under homothetic CES.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiElasticity {
    pub closed_form: f64,
    pub finite_difference: f64,
}

pub fn semi_elasticity_ratio(inst: &TwoCountryInstance) -> Result<SemiElasticity> {
    let (t, _) = inst.uniform_tariffs().ok_or_else(|| Error::validation("semi-elasticities need uniform tariffs"))?;
    let ces = inst.with_family(PreferenceFamily::HomotheticCes, &inst.epsilon);
    let dlu = |i: &TwoCountryInstance| -> Result<f64> {
        let up = home_welfare(i, t + FD_STEP)?;
        let dn = home_welfare(i, t - FD_STEP)?;
        Ok((up.ln() - dn.ln()) / (2.0 * FD_STEP))
    };
    let fd = dlu(inst)? / dlu(&ces)?;
    let base = solve(inst)?;
    Ok(SemiElasticity { closed_form: 1.0 / base.eps_bar[HOME], finite_difference: fd })
}

/// One row of a tariff schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleRow {
    pub tau: f64,
    pub w: f64,
    pub u_h: f64,
    pub u_f: f64,
    pub mu_h: f64,
    pub omega_h: Vec<f64>,
    pub va_h: Vec<f64>,
}

/// Solve the economy along a grid of Home tariffs applied to `sectors`
/// (every sector when empty); other Home tariffs keep their values.
pub fn sweep(inst: &TwoCountryInstance, sectors: &[usize], grid: &[f64]) -> Result<Vec<ScheduleRow>> {
    let all: Vec<usize> = (0..inst.sectors()).collect();
    let set = if sectors.is_empty() { &all[..] } else { sectors };
    if set.iter().any(|&s| s >= inst.sectors()) {
        return Err(Error::validation("sector index out of range"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    let mut cur = inst.clone();
    for &t in grid {
        for &s in set {
            cur.tau_hf[s] = t;
        }
        let eq = solve(&cur)?;
        rows.push(ScheduleRow {
            tau: t,
            w: eq.w,
            u_h: eq.u[HOME],
            u_f: eq.u[FOREIGN],
            mu_h: eq.mu[HOME],
            omega_h: eq.omega[HOME].clone(),
            va_h: eq.va[HOME].clone(),
        });
    }
    Ok(rows)
}

/// Write a schedule as CSV with columns
/// `tau,w,u_H,u_F,mu_H,omega_<sector>...,va_<sector>...`.
pub fn write_schedule(path: &Path, rows: &[ScheduleRow], sector_names: &[String]) -> Result<()> {
    let err = |e: csv::Error| Error::Csv { path: path.display().to_string(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    let mut header = vec!["tau".to_string(), "w".into(), "u_H".into(), "u_F".into(), "mu_H".into()];
    header.extend(sector_names.iter().map(|s| format!("omega_{s}")));
    header.extend(sector_names.iter().map(|s| format!("va_{s}")));
    w.write_record(&header).map_err(err)?;
    for r in rows {
        let mut rec = vec![r.tau.to_string(), r.w.to_string(), r.u_h.to_string(), r.u_f.to_string(), r.mu_h.to_string()];
        rec.extend(r.omega_h.iter().map(|v| v.to_string()));
        rec.extend(r.va_h.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: [f64; 3] = [0.05, 1.0, 1.2];

    fn nh() -> TwoCountryInstance {
        TwoCountryInstance::symmetric(EPS.to_vec(), 4.0, 0.5, PreferenceFamily::NonhomotheticCes)
    }

    #[test]
    fn symmetric_free_trade_wage_is_one() {
        for fam in [PreferenceFamily::NonhomotheticCes, PreferenceFamily::HomotheticCes, PreferenceFamily::CobbDouglas] {
            let i = nh().with_family(fam, &EPS);
            assert!((equilibrium_wage(&i).unwrap() - 1.0).abs() < 1e-12);
            let eq = solve(&i).unwrap();
            assert!(eq.trade_gap.abs() < 1e-12);
        }
    }

    #[test]
    fn rhs_is_decreasing_with_extreme_limits() {
        let mut i = nh();
        i.a_h = 1.3;
        i.l_h = 2.0;
        i.tau_hf = vec![0.2; 3];
        let grid: Vec<f64> = (-40..=40).map(|k| (k as f64 * 0.25).exp()).collect();
        let vals: Vec<f64> = grid.iter().map(|&w| labor_supply_rhs(&i, w).unwrap()).collect();
        assert!(vals.windows(2).all(|v| v[1] < v[0]));
        assert!(vals[0] > 1e6 && *vals.last().unwrap() < 1e-6);
    }

    #[test]
    fn closed_form_and_trade_balance_agree() {
        let mut i = nh();
        i.a_h = 1.2;
        i.l_h = 2.0;
        i.d_fh = 1.8;
        i.tau_hf = vec![0.15; 3];
        let a = closed_form_wage(&i).unwrap();
        let b = trade_balance_wage(&i).unwrap();
        assert!((a / b - 1.0).abs() < 1e-10);
        let wi = welfare_index(&i, a).unwrap();
        let eq = evaluate(&i, a).unwrap();
        assert!((wi.u_h / eq.u[HOME] - 1.0).abs() < 1e-10);
        assert!((wi.u_f / eq.u[FOREIGN] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tariff_raises_relative_wage() {
        let base = closed_form_wage(&nh()).unwrap();
        let up = closed_form_wage(&nh().with_uniform_tariff(0.05)).unwrap();
        assert!(up > base);
    }

    #[test]
    fn homothetic_u_closed_form() {
        let x = 3.7;
        let u = u_of_x(x, 4.0, 0.5, &[1.0; 3], PreferenceFamily::HomotheticCes).unwrap();
        assert!((u - 3f64.powf(1.0 / (0.5 - 1.0)) * x.powf(0.25)).abs() < 1e-13);
        let a = u_of_x(2.0, 4.0, 0.5, &EPS, PreferenceFamily::NonhomotheticCes).unwrap();
        let b = u_of_x(2.0 + 1e-4, 4.0, 0.5, &EPS, PreferenceFamily::NonhomotheticCes).unwrap();
        assert!(b > a);
    }

    #[test]
    fn elasticity_of_u_falls_with_x() {
        let xs: Vec<f64> = (0..30).map(|k| 0.2 * 1.3f64.powi(k)).collect();
        let v: Vec<f64> = xs.iter().map(|&x| u_elasticity(x, 4.0, 0.5, &EPS, PreferenceFamily::NonhomotheticCes).unwrap()).collect();
        assert!(v.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn optimal_tariff_matches_grid_and_is_family_free() {
        let i = nh();
        let o = optimal_tariff(&i).unwrap();
        assert!((o.fixed_point - o.refined_argmax).abs() < 1e-4);
        assert!((o.fixed_point - o.grid_argmax).abs() <= 1e-3);
        let h = optimal_tariff(&i.with_family(PreferenceFamily::HomotheticCes, &EPS)).unwrap();
        assert!((h.fixed_point - o.fixed_point).abs() < 1e-10);
    }

    #[test]
    fn small_home_optimal_tariff_tends_to_inverse_theta() {
        let mut i = nh();
        i.l_h = 1e-4;
        let o = optimal_tariff_on(&i, &[0.0, 0.1, 0.2, 0.3]).unwrap();
        assert!((o.fixed_point - 0.25).abs() < 1e-3);
    }

    #[test]
    fn share_decomposition_adds_up_and_signs() {
        let i = nh();
        let dec = share_decomposition(&i, &[1.0; 3]).unwrap();
        for e in &dec.home {
            assert!((e.relative_price + e.income - e.d_ln_omega).abs() < 1e-6);
            assert!(e.relative_price.abs() < 1e-6);
        }
        assert!(dec.home[0].d_ln_omega < 0.0 && dec.home[2].d_ln_omega > 0.0);
        let cd = share_decomposition(&i.with_family(PreferenceFamily::CobbDouglas, &EPS), &[0.0, 1.0, 0.0]).unwrap();
        assert!(cd.home.iter().all(|e| e.d_ln_omega.abs() < 1e-8 && e.income == 0.0));
    }

    #[test]
    fn homothetic_va_channels_match_closed_forms() {
        let mut i = TwoCountryInstance::symmetric(vec![1.0; 3], 4.0, 0.5, PreferenceFamily::HomotheticCes);
        i.a_h = 1.25;
        i.l_h = 1.7;
        i.d_hf = 1.6;
        let dtau = [0.0, 1.0, 0.0];
        let dec = value_added_decomposition(&i, &dtau).unwrap();
        let eq = solve(&i).unwrap();
        let (jn, js, sig, th) = (3.0, 1.0, 0.5, 4.0);
        let pi_hf = eq.pi_import[HOME][0];
        let a = i.a_h / i.a_f;
        let k = (eq.w / i.d_hf).powf(th) + a.powf(th);
        let core = sig * (eq.w / i.d_hf).powf(th) + (1.0 + th) * a.powf(th);
        let h = &dec[HOME];
        assert!((h[1].expenditure - (1.0 - sig * (1.0 - js / jn)) * pi_hf).abs() < 1e-6);
        assert!((h[0].expenditure - js / jn * sig * pi_hf).abs() < 1e-6);
        assert!((h[1].net_exports - pi_hf * (jn - js) * core / (jn * k)).abs() < 1e-6);
        assert!((h[0].net_exports + pi_hf * js * core / (jn * k)).abs() < 1e-6);
        assert!((h[1].tariff_revenue + pi_hf).abs() < 1e-6);
        assert!(h[0].tariff_revenue.abs() < 1e-9);
        assert!((h[1].d_ln_va - pi_hf * (jn - js) * a.powf(th) * (th + 1.0 - sig) / (jn * k)).abs() < 1e-6);
        for s in 0..3 {
            let e = h[s];
            assert!((e.expenditure + e.net_exports + e.tariff_revenue - e.d_ln_va).abs() < 1e-6);
        }
    }

    #[test]
    fn semi_elasticity_ratio_is_inverse_eps_bar() {
        let r = semi_elasticity_ratio(&nh()).unwrap();
        assert!((r.closed_form - r.finite_difference).abs() < 1e-6);
        let one = semi_elasticity_ratio(&nh().with_family(PreferenceFamily::HomotheticCes, &EPS)).unwrap();
        assert!((one.finite_difference - 1.0).abs() < 1e-6);
    }

    #[test]
    fn schedule_csv_round_trip() {
        let rows = sweep(&nh(), &[1], &[0.0, 0.1, 0.2]).unwrap();
        assert!(rows[1].w > rows[0].w);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_schedule(&p, &rows, &["a".into(), "m".into(), "s".into()]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("tau,w,u_H,u_F,mu_H,omega_a,omega_m,omega_s,va_a,va_m,va_s"));
        assert_eq!(text.lines().count(), 4);
    }
}
