//! Inversion of observed data into model fundamentals.
//!
//! The pipeline runs in the order each step's inputs become available:
//!
//! 1. gravity regressions per sector and year give importer effects `S`
//!    (up to a per-year scale) and the bilateral trade costs;
//! 2. own trade shares and `S` give price indices, whose per-year scale is
//!    pinned by the reference country's observed gross-output prices;
//! 3. input-output and investment cost shares give the CES shifters, hence
//!    the composite intermediate price and the investment-good price;
//! 4. investment deflated by that price accumulates into capital, and value
//!    added with labor shares gives wages and rental rates;
//! 5. unit costs and `S` give productivity;
//! 6. consumption shares give the demand shifters and real consumption;
//! 7. the Euler equation gives the intertemporal shifters, normalized to one
//!    in the last sample year.

pub mod panel;
pub mod ppml;

use ndarray::{Array1, Array2, Array3, Array4};

use crate::config::{ModelConfig, PreferenceFamily};
use crate::error::{Error, Result};
use crate::fundamentals::Fundamentals;
use crate::model::demand::{expenditure_shares, log_aggregate_price, Preferences};
use crate::model::{capital_good_price, input_bundle_cost, intermediate_price_index, investment_requirement, next_capital};
use crate::num::bisect;

pub use panel::{distance_bin, GravityCovariates, ObservedPanel, DISTANCE_BOUNDS};
pub use ppml::{PpmlFit, PpmlSettings};

/// Gravity estimates of one sector and year.
#[derive(Debug, Clone, PartialEq)]
pub struct YearFit {
    pub covariates: Vec<String>,
    pub fit: PpmlFit,
}

/// Gravity estimates of one sector, year by year.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityFit {
    pub sector: usize,
    pub years: Vec<YearFit>,
}

impl GravityFit {
    /// `ln S[n, t]`, zero for the reference country in every year.
    pub fn log_importer_effects(&self, n: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, self.years.len()), |(c, t)| self.years[t].fit.importer_fe[c])
    }

    pub fn coefficient(&self, year: usize, name: &str) -> Option<f64> {
        let y = &self.years[year];
        y.covariates.iter().position(|c| c == name).map(|k| y.fit.beta[k])
    }
}

/// Design columns of one year: interval dummies for every distance interval
/// present except the lowest one, followed by border, currency union and
/// RTA indicators. Columns that are constant across pairs are dropped since
/// the fixed effects absorb them.
fn design(panel: &ObservedPanel, t: usize, pairs: &[(usize, usize)]) -> (Vec<String>, Vec<Vec<f64>>) {
    let cov = &panel.covariates;
    let bins: Vec<usize> = pairs.iter().map(|&(n, i)| distance_bin(cov.distance[[n, i]])).collect();
    let mut present: Vec<usize> = bins.clone();
    present.sort_unstable();
    present.dedup();
    let mut names = Vec::new();
    let mut cols = Vec::new();
    for &b in present.iter().skip(1) {
        names.push(format!("dist_{}", b + 1));
        cols.push(bins.iter().map(|&v| if v == b { 1.0 } else { 0.0 }).collect::<Vec<f64>>());
    }
    for (name, arr) in [("border", &cov.border), ("currency_union", &cov.currency_union), ("rta", &cov.rta)] {
        names.push(name.to_string());
        cols.push(pairs.iter().map(|&(n, i)| arr[[n, i, t]]).collect());
    }
    let keep: Vec<bool> = cols.iter().map(|c| c.iter().any(|&v| v != c[0])).collect();
    let names = names.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(n, _)| n).collect();
    let cols = cols.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(c, _)| c).collect();
    (names, cols)
}

fn off_diagonal_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect()
}

/// Tariff-adjusted gravity regression of one sector, estimated separately
/// for every year. The dependent variable is
/// `pi_ni / pi_nn * (1 + tau_ni)^theta` over pairs `n != i`.
pub fn gravity_ppml(panel: &ObservedPanel, sector: usize, theta: f64, s: &PpmlSettings) -> Result<GravityFit> {
    let n = panel.n();
    let pairs = off_diagonal_pairs(n);
    let imp: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let exp: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let mut years = Vec::with_capacity(panel.t());
    for t in 0..panel.t() {
        let y: Vec<f64> = pairs
            .iter()
            .map(|&(a, b)| panel.pi[[a, b, sector, t]] / panel.pi[[a, a, sector, t]] * (1.0 + panel.tau[[a, b, sector, t]]).powf(theta))
            .collect();
        let (names, cols) = design(panel, t, &pairs);
        let data = ppml::PpmlData { y: &y, importer: &imp, exporter: &exp, x: &cols, names: &names, groups: n };
        let fit = ppml::fit(&data, panel.reference, s).map_err(|e| match e {
            Error::Estimation(m) => Error::Estimation(format!("sector {}, {}: {m}", panel.sectors[sector], panel.years[t])),
            other => other.with_context(format!("sector {}, {}", panel.sectors[sector], panel.years[t])),
        })?;
        years.push(YearFit { covariates: names, fit });
    }
    Ok(GravityFit { sector, years })
}

/// Iceberg costs implied cell by cell by the trade shares and the importer
/// effects: `b_ni^(-theta) = pi_ni / pi_nn * S_i / S_n`, `d = b / (1 + tau)`.
/// The regression residual is kept, so the shares are matched exactly.
pub fn recover_trade_costs(panel: &ObservedPanel, log_s: &Array3<f64>, theta: &[f64]) -> Result<Array4<f64>> {
    let (n, j, t) = (panel.n(), panel.j(), panel.t());
    let mut d = Array4::from_elem((n, n, j, t), 1.0);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            for k in 0..j {
                for p in 0..t {
                    let pi = panel.pi[[a, b, k, p]];
                    if !(pi > 0.0) {
                        return Err(Error::Data(format!(
                            "zero flow from {} to {} in sector {}, {} implies an infinite trade cost",
                            panel.countries[b], panel.countries[a], panel.sectors[k], panel.years[p]
                        )));
                    }
                    let ln_b = -((pi / panel.pi[[a, a, k, p]]).ln() + log_s[[b, k, p]] - log_s[[a, k, p]]) / theta[k];
                    d[[a, b, k, p]] = ln_b.exp() / (1.0 + panel.tau[[a, b, k, p]]);
                }
            }
        }
    }
    Ok(d)
}

/// Trade costs predicted by the regressors and exporter effects alone:
/// `ln d = -(x'beta + X_i + I_i) / theta`.
pub fn fitted_trade_costs(panel: &ObservedPanel, fit: &GravityFit, theta: f64) -> Array3<f64> {
    let n = panel.n();
    let pairs = off_diagonal_pairs(n);
    let mut d = Array3::from_elem((n, n, panel.t()), 1.0);
    for (t, yf) in fit.years.iter().enumerate() {
        let (_, cols) = design(panel, t, &pairs);
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let xb: f64 = cols.iter().zip(&yf.fit.beta).map(|(c, be)| c[k] * be).sum();
            d[[a, b, t]] = (-(xb + yf.fit.exporter_fe[b] + yf.fit.importer_fe[b]) / theta).exp();
        }
    }
    d
}

/// Rescaled importer effects and price indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceRecovery {
    /// `ln S[n, j, t]`, comparable across years.
    pub log_s: Array3<f64>,
    pub p: Array3<f64>,
    /// Per-sector, per-year rescaling factors `ln a[j, t]`.
    pub log_a: Array2<f64>,
}

/// Price indices `P = (pi_nn S)^(1/theta)` after rescaling `S` by
/// `a_t = P_ref,data^theta sum_n S_n^(-1) b_ref,n^(-theta)`.
pub fn recover_prices(panel: &ObservedPanel, log_s_raw: &Array3<f64>, d: &Array4<f64>, theta: &[f64]) -> Result<PriceRecovery> {
    let (n, j, t) = (panel.n(), panel.j(), panel.t());
    let rf = panel.reference;
    let mut log_s = log_s_raw.clone();
    let mut log_a = Array2::zeros((j, t));
    let mut p = Array3::zeros((n, j, t));
    for k in 0..j {
        let th = theta[k];
        for q in 0..t {
            let z: Vec<f64> = (0..n)
                .map(|i| -log_s_raw[[i, k, q]] - th * (d[[rf, i, k, q]] * (1.0 + panel.tau[[rf, i, k, q]])).ln())
                .collect();
            let la = th * panel.p_ref[[k, q]].ln() + crate::num::log_sum_exp(&z);
            log_a[[k, q]] = la;
            for c in 0..n {
                log_s[[c, k, q]] += la;
                let own = panel.pi[[c, c, k, q]];
                if !(own > 0.0) {
                    return Err(Error::Data(format!("missing own trade share for {}", panel.countries[c])));
                }
                p[[c, k, q]] = ((own.ln() + log_s[[c, k, q]]) / th).exp();
            }
        }
    }
    Ok(PriceRecovery { log_s, p, log_a })
}

/// CES shifters reproducing observed cost shares at prices `p`:
/// `kappa ∝ g P^(s-1)`, normalized to sum to one.
pub fn invert_shifters(g: &[f64], p: &[f64], s: f64) -> Vec<f64> {
    let raw: Vec<f64> = g.iter().zip(p).map(|(&g, &p)| if g > 0.0 { g * p.powf(s - 1.0) } else { 0.0 }).collect();
    let tot: f64 = raw.iter().sum();
    raw.iter().map(|v| v / tot).collect()
}

/// Input-output and investment shifters for every country, sector and year.
pub fn invert_io_shifters(
    g_io: &Array4<f64>,
    g_k: &Array3<f64>,
    p: &Array3<f64>,
    sigma_io: &[f64],
    sigma_k: f64,
) -> Result<(Array4<f64>, Array3<f64>)> {
    let (n, j, _, t) = g_io.dim();
    let mut kio = Array4::zeros((n, j, j, t));
    let mut kk = Array3::zeros((n, j, t));
    for c in 0..n {
        for q in 0..t {
            let prow: Vec<f64> = (0..j).map(|h| p[[c, h, q]]).collect();
            for u in 0..j {
                let g: Vec<f64> = (0..j).map(|h| g_io[[c, u, h, q]]).collect();
                if !g.iter().any(|&v| v > 0.0) {
                    return Err(Error::Data(format!("intermediate cost shares of country {c}, sector {u} are all zero")));
                }
                for (h, v) in invert_shifters(&g, &prow, sigma_io[u]).into_iter().enumerate() {
                    kio[[c, u, h, q]] = v;
                }
            }
            let g: Vec<f64> = (0..j).map(|h| g_k[[c, h, q]]).collect();
            if !g.iter().any(|&v| v > 0.0) {
                return Err(Error::Data(format!("investment cost shares of country {c} are all zero")));
            }
            for (h, v) in invert_shifters(&g, &prow, sigma_k).into_iter().enumerate() {
                kk[[c, h, q]] = v;
            }
        }
    }
    Ok((kio, kk))
}

/// Demand shifters and consumption matched to observed shares.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaInversion {
    pub omega_shift: Array3<f64>,
    /// Aggregate real consumption `[n, t]`.
    pub c: Array2<f64>,
    pub eps_bar: Array2<f64>,
    /// Largest number of Newton steps any cell needed.
    pub iterations: usize,
    /// Largest absolute gap between model-implied and observed shares.
    pub max_share_error: f64,
}

/// Joint solution of the consumption index and the demand shifters of one
/// country-year. Given `C`, the shifters that reproduce observed shares are
/// `Omega^j = omega^j [(E/L) / ((C/L)^eps_j P_j)]^(1-sigma)`; normalizing
/// them to sum to one is a monotone scalar equation in `ln C`, solved by
/// Newton with a bisection fallback.
fn invert_cell(e: f64, l: f64, p: &[f64], shares: &[f64], eps: &[f64], sigma: f64, family: PreferenceFamily) -> Result<(Vec<f64>, f64, usize)> {
    let j = p.len();
    if family == PreferenceFamily::CobbDouglas || sigma == 1.0 {
        let tot: f64 = shares.iter().sum();
        let om: Vec<f64> = shares.iter().map(|s| s / tot).collect();
        let prefs = Preferences::new(eps, 1.0, PreferenceFamily::CobbDouglas);
        let c = (e.ln() - log_aggregate_price(p, &om, &prefs)).exp();
        return Ok((om, c, 0));
    }
    let s = 1.0 - sigma;
    let le = (e / l).ln();
    let terms = |x: f64| -> Vec<f64> {
        (0..j)
            .filter(|&k| shares[k] > 0.0)
            .map(|k| shares[k].ln() + s * (le - eps[k] * (x - l.ln()) - p[k].ln()))
            .collect()
    };
    let h = |x: f64| crate::num::log_sum_exp(&terms(x));
    let dh = |x: f64| {
        let z = terms(x);
        let lse = crate::num::log_sum_exp(&z);
        let ks: Vec<usize> = (0..j).filter(|&k| shares[k] > 0.0).collect();
        -s * ks.iter().zip(&z).map(|(&k, v)| eps[k] * (v - lse).exp()).sum::<f64>()
    };
    let mut x = e.ln();
    let mut iters = 0;
    let mut ok = false;
    for it in 1..=100 {
        iters = it;
        let f = h(x);
        let step = f / dh(x);
        x -= step.clamp(-20.0, 20.0);
        if step.abs() < 1e-15 * x.abs().max(1.0) || f.abs() < 1e-15 {
            ok = true;
            break;
        }
    }
    if !ok {
        let mut lo = x - 1.0;
        let mut hi = x + 1.0;
        while h(lo) < 0.0 {
            lo -= 2.0;
        }
        while h(hi) > 0.0 {
            hi += 2.0;
        }
        x = bisect(h, lo, hi, 1e-15, 400).ok_or_else(|| Error::NonConvergence {
            solver: "demand shifter inversion",
            iterations: 400,
            residual: f64::NAN,
            context: format!("E={e}, L={l}"),
        })?;
    }
    let om: Vec<f64> = (0..j)
        .map(|k| if shares[k] > 0.0 { (shares[k].ln() + s * (le - eps[k] * (x - l.ln()) - p[k].ln())).exp() } else { 0.0 })
        .collect();
    Ok((om, x.exp(), iters))
}

pub fn invert_omega(
    e: &Array2<f64>,
    l: &Array2<f64>,
    p: &Array3<f64>,
    shares: &Array3<f64>,
    epsilon: &[f64],
    sigma: f64,
    family: PreferenceFamily,
) -> Result<OmegaInversion> {
    let (n, j, t) = p.dim();
    let eps: Vec<f64> = if family == PreferenceFamily::NonhomotheticCes { epsilon.to_vec() } else { vec![1.0; j] };
    let mut om = Array3::zeros((n, j, t));
    let mut c = Array2::zeros((n, t));
    let mut eb = Array2::zeros((n, t));
    let mut iters = 0;
    let mut err = 0.0f64;
    let prefs = Preferences::new(&eps, sigma, family);
    for a in 0..n {
        for q in 0..t {
            let prow: Vec<f64> = (0..j).map(|k| p[[a, k, q]]).collect();
            let srow: Vec<f64> = (0..j).map(|k| shares[[a, k, q]]).collect();
            let (o, cv, it) = invert_cell(e[[a, q]], l[[a, q]], &prow, &srow, &eps, sigma, family)
                .map_err(|er| er.with_context(format!("country {a}, period {q}")))?;
            iters = iters.max(it);
            let (sh, ebar) = expenditure_shares(cv, l[[a, q]], &prow, &o, &prefs);
            for k in 0..j {
                err = err.max((sh[k] - srow[k]).abs());
                om[[a, k, q]] = o[k];
            }
            c[[a, q]] = cv;
            eb[[a, q]] = ebar;
        }
    }
    Ok(OmegaInversion { omega_shift: om, c, eps_bar: eb, iterations: iters, max_share_error: err })
}

/// Real capital `[n, T+1]` accumulated from the deflated initial stock and
/// deflated investment.
pub fn build_capital_series(
    gfcf: &Array2<f64>,
    pk: &Array2<f64>,
    k0_value: &Array1<f64>,
    delta: &Array2<f64>,
    lambda: f64,
) -> Array2<f64> {
    let (n, t) = gfcf.dim();
    let mut k = Array2::zeros((n, t + 1));
    for c in 0..n {
        k[[c, 0]] = k0_value[c] / pk[[c, 0]];
        for q in 0..t {
            let inv = gfcf[[c, q]] / pk[[c, q]];
            k[[c, q + 1]] = next_capital(k[[c, q]], inv, delta[[c, q]], lambda);
        }
    }
    k
}

/// Series entering the intertemporal shifter inversion. Capital has one
/// more column than the other series.
#[derive(Debug, Clone, Copy)]
pub struct EulerData<'a> {
    pub c: &'a Array2<f64>,
    pub l: &'a Array2<f64>,
    pub e: &'a Array2<f64>,
    pub eps_bar: &'a Array2<f64>,
    pub r: &'a Array2<f64>,
    pub pk: &'a Array2<f64>,
    pub k: &'a Array2<f64>,
    pub phi: &'a Array2<f64>,
    pub delta: &'a Array2<f64>,
}

/// Intertemporal shifters solving the Euler equation exactly along the
/// observed path, normalized to one in the last year.
pub fn backout_zeta(data: &EulerData, cfg: &ModelConfig) -> Result<Array2<f64>> {
    let (n, t) = data.c.dim();
    let mut zeta = Array2::from_elem((n, t), 1.0);
    for a in 0..n {
        for q in (0..t.saturating_sub(1)).rev() {
            let cur = investment_requirement(data.k[[a, q + 1]], data.k[[a, q]], data.delta[[a, q]], cfg.lambda_adj)?;
            let nxt = investment_requirement(data.k[[a, q + 2]], data.k[[a, q + 1]], data.delta[[a, q + 1]], cfg.lambda_adj)?;
            let ret = (1.0 - data.phi[[a, q + 1]]) * data.r[[a, q + 1]] - data.pk[[a, q + 1]] * nxt.phi2;
            let m = (data.l[[a, q + 1]] / data.l[[a, q]])
                * (data.e[[a, q]] / data.e[[a, q + 1]])
                * (data.eps_bar[[a, q]] / data.eps_bar[[a, q + 1]])
                * ret
                / (data.pk[[a, q]] * cur.phi1);
            if !(m > 0.0) {
                return Err(Error::Data(format!("non-positive return to capital for country {a} in period {}", q + 1)));
            }
            let growth = (data.c[[a, q + 1]] / data.c[[a, q]]) * (data.l[[a, q]] / data.l[[a, q + 1]]);
            let ratio = growth.powf(cfg.psi - 1.0) / (cfg.beta * m);
            zeta[[a, q]] = zeta[[a, q + 1]] / ratio;
        }
    }
    Ok(zeta)
}

/// Productivity `A = c_tilde S^(-1/theta)` from rescaled importer effects.
pub fn recover_productivity(log_s: &Array3<f64>, c_tilde: &Array3<f64>, theta: &[f64]) -> Array3<f64> {
    Array3::from_shape_fn(log_s.dim(), |(c, k, q)| c_tilde[[c, k, q]] * (-log_s[[c, k, q]] / theta[k]).exp())
}

/// Everything the pipeline recovers.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub fund: Fundamentals,
    pub gravity: Vec<GravityFit>,
    pub prices: PriceRecovery,
    pub xi: Array3<f64>,
    pub pk: Array2<f64>,
    pub w: Array2<f64>,
    pub r: Array2<f64>,
    /// Capital `[n, T+1]`.
    pub k: Array2<f64>,
    pub c_tilde: Array3<f64>,
    pub omega: OmegaInversion,
}

/// Run the whole pipeline. Global parameters (elasticities, preferences,
/// adjustment costs) come from `cfg`.
pub fn calibrate(panel: &ObservedPanel, cfg: &ModelConfig, s: &PpmlSettings) -> Result<Calibration> {
    panel.validate()?;
    let mut cfg = cfg.clone();
    cfg.validate()?;
    let (n, j, t) = (panel.n(), panel.j(), panel.t());
    if cfg.sectors() != j {
        return Err(Error::validation(format!("configuration lists {} sectors, panel has {j}", cfg.sectors())));
    }
    let mut gravity = Vec::with_capacity(j);
    let mut log_s_raw = Array3::zeros((n, j, t));
    for k in 0..j {
        let g = gravity_ppml(panel, k, cfg.theta[k], s)?;
        let ls = g.log_importer_effects(n);
        for c in 0..n {
            for q in 0..t {
                log_s_raw[[c, k, q]] = ls[[c, q]];
            }
        }
        gravity.push(g);
    }
    let d = recover_trade_costs(panel, &log_s_raw, &cfg.theta)?;
    let prices = recover_prices(panel, &log_s_raw, &d, &cfg.theta)?;
    let p = &prices.p;
    let (kio, kk) = invert_io_shifters(&panel.g_io, &panel.g_k, p, &cfg.sigma_io, cfg.sigma_k)?;
    let mut xi = Array3::zeros((n, j, t));
    let mut pk = Array2::zeros((n, t));
    for c in 0..n {
        for q in 0..t {
            let prow: Vec<f64> = (0..j).map(|h| p[[c, h, q]]).collect();
            for u in 0..j {
                let kap: Vec<f64> = (0..j).map(|h| kio[[c, u, h, q]]).collect();
                xi[[c, u, q]] = intermediate_price_index(&prow, &kap, cfg.sigma_io[u])?;
            }
            let kap: Vec<f64> = (0..j).map(|h| kk[[c, h, q]]).collect();
            pk[[c, q]] = capital_good_price(&prow, &kap, cfg.sigma_k)?;
        }
    }
    let k = build_capital_series(&panel.gfcf, &pk, &panel.capital0_value, &panel.delta, cfg.lambda_adj);
    let gamma = &panel.value_added / &panel.gross_output;
    if gamma.iter().any(|&g| !(g > 0.0 && g <= 1.0)) {
        return Err(Error::Data("value added must not exceed gross output".into()));
    }
    let alpha = panel.labor_share.mapv(|v| 1.0 - v);
    let mut w = Array2::zeros((n, t));
    let mut r = Array2::zeros((n, t));
    for c in 0..n {
        for q in 0..t {
            let lab: f64 = (0..j).map(|h| panel.labor_share[[c, h, q]] * panel.value_added[[c, h, q]]).sum();
            let cap: f64 = (0..j).map(|h| (1.0 - panel.labor_share[[c, h, q]]) * panel.value_added[[c, h, q]]).sum();
            w[[c, q]] = lab / panel.employment[[c, q]];
            r[[c, q]] = cap / k[[c, q]];
        }
    }
    let mut c_tilde = Array3::zeros((n, j, t));
    for c in 0..n {
        for h in 0..j {
            for q in 0..t {
                c_tilde[[c, h, q]] = input_bundle_cost(r[[c, q]], w[[c, q]], xi[[c, h, q]], gamma[[c, h, q]], alpha[[c, h, q]])?;
            }
        }
    }
    let a = recover_productivity(&prices.log_s, &c_tilde, &cfg.theta);
    let omega = invert_omega(&panel.consumption, &panel.population, p, &panel.consumption_shares, &cfg.epsilon, cfg.sigma, cfg.preference_family)?;
    let zeta = backout_zeta(
        &EulerData {
            c: &omega.c,
            l: &panel.population,
            e: &panel.consumption,
            eps_bar: &omega.eps_bar,
            r: &r,
            pk: &pk,
            k: &k,
            phi: &panel.phi,
            delta: &panel.delta,
        },
        &cfg,
    )?;
    let mut fund = Fundamentals::uniform(panel.countries.clone(), panel.sectors.clone(), panel.years.clone());
    fund.a = a;
    fund.d = d;
    fund.tau = panel.tau.clone();
    fund.kappa_io = kio;
    fund.kappa_k = kk;
    fund.omega_shift = omega.omega_shift.clone();
    fund.zeta = zeta;
    fund.l = panel.population.clone();
    fund.delta = panel.delta.clone();
    fund.phi = panel.phi.clone();
    fund.gamma = gamma;
    fund.alpha = alpha;
    fund.k0 = k.column(0).to_owned();
    fund.validate()?;
    Ok(Calibration { fund, gravity, prices, xi, pk, w, r, k, c_tilde, omega })
}
