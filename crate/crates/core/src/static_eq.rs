//! Within-period equilibrium: wages outside, prices and spending inside.

use ndarray::{Array1, Array2, Array3};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::fundamentals::PeriodFundamentals;
use crate::model::accounting::{gross_output, portfolio_transfer, spending_rhs, tariff_revenue, trade_deficit, value_added_shares};
use crate::model::demand::{expenditure_shares, newton_consumption, NewtonSettings, Preferences};
use crate::model::production::{composite_cost_shares, log_ces_index, log_input_bundle_cost, log_price_from_costs};
use crate::model::PeriodEquilibrium;

/// Inputs of a single-period solve.
#[derive(Debug, Clone)]
pub struct PeriodInputs {
    pub t: usize,
    /// Predetermined capital.
    pub k: Array1<f64>,
    /// Saving rates; zero is accepted (no investment).
    pub rho: Array1<f64>,
    pub fund: PeriodFundamentals,
}

impl PeriodInputs {
    pub fn validate(&self) -> Result<()> {
        let n = self.fund.countries();
        if self.k.len() != n || self.rho.len() != n {
            return Err(Error::validation("capital and saving-rate vectors must have one entry per country"));
        }
        if self.k.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::validation(format!("capital must be positive in period {}", self.t)));
        }
        if self.rho.iter().any(|&v| !(0.0..1.0).contains(&v)) {
            return Err(Error::validation(format!("saving rates must lie in [0,1) in period {}", self.t)));
        }
        Ok(())
    }
}

/// Solved price block.
#[derive(Debug, Clone)]
pub struct Prices {
    pub xi: Array2<f64>,
    pub c_tilde: Array2<f64>,
    pub p: Array2<f64>,
}

/// Factor prices and capital entering one spending solve.
#[derive(Debug, Clone, Copy)]
pub struct Factors<'a> {
    pub w: &'a Array1<f64>,
    pub r: &'a Array1<f64>,
    pub k: &'a Array1<f64>,
}

/// How nominal investment is pinned down inside the spending loop.
#[derive(Debug, Clone, Copy)]
pub enum InvestmentRule<'a> {
    /// Investment is a share `rho` of national income.
    SavingRate(&'a Array1<f64>),
    /// Investment is a given nominal amount.
    Level(&'a Array1<f64>),
}

/// Solved spending block.
#[derive(Debug, Clone)]
pub struct Spending {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub e: Array1<f64>,
    pub c: Array1<f64>,
    pub omega: Array2<f64>,
    pub eps_bar: Array1<f64>,
    pub t_tariff: Array1<f64>,
    pub tp: f64,
    pub ni: Array1<f64>,
    pub inv_value: Array1<f64>,
    pub g_io: Array3<f64>,
    pub g_k: Array2<f64>,
    pub pk: Array1<f64>,
}

fn trace(hist: &[f64]) -> String {
    let tail: Vec<String> = hist.iter().rev().take(5).rev().map(|v| format!("{v:.2e}")).collect();
    format!("residual trace [{}]", tail.join(", "))
}

/// Fixed point of `P -> F3(F2(F1(P)))` at given factor prices.
pub fn solve_prices(
    w: &Array1<f64>,
    r: &Array1<f64>,
    fund: &PeriodFundamentals,
    cfg: &ModelConfig,
    guess: Option<&Array2<f64>>,
) -> Result<Prices> {
    let (n, jn) = fund.a.dim();
    if w.iter().chain(r.iter()).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::domain("solve_prices", "wages and rentals must be positive"));
    }
    let lb = fund.b().mapv(f64::ln);
    let la = fund.a.mapv(f64::ln);
    let lw = w.mapv(f64::ln);
    let lr = r.mapv(f64::ln);
    let mut lp = match guess {
        Some(g) => g.mapv(f64::ln),
        None => Array2::zeros((n, jn)),
    };
    let mut lxi = Array2::<f64>::zeros((n, jn));
    let mut lc = Array2::<f64>::zeros((n, jn));
    let mut hist = Vec::new();
    let damp = cfg.damp.price;
    let mut row = vec![0.0; jn];
    let mut unit = vec![0.0; n];
    for _ in 0..cfg.tol.max_price_iter {
        for c in 0..n {
            for k in 0..jn {
                row[k] = lp[[c, k]];
            }
            for k in 0..jn {
                let kap: Vec<f64> = (0..jn).map(|h| fund.kappa_io[[c, k, h]]).collect();
                lxi[[c, k]] = log_ces_index(&row, &kap, cfg.sigma_io[k]);
                lc[[c, k]] = log_input_bundle_cost(lr[c], lw[c], lxi[[c, k]], fund.gamma[[c, k]], fund.alpha[[c, k]]);
            }
        }
        let mut diff: f64 = 0.0;
        let mut new = Array2::<f64>::zeros((n, jn));
        for c in 0..n {
            for k in 0..jn {
                for i in 0..n {
                    unit[i] = lc[[i, k]] + lb[[c, i, k]] - la[[i, k]];
                }
                let v = log_price_from_costs(&unit, cfg.theta[k]);
                diff = diff.max((v - lp[[c, k]]).abs());
                new[[c, k]] = v;
            }
        }
        hist.push(diff);
        if !diff.is_finite() {
            break;
        }
        if diff <= cfg.tol.price {
            return Ok(Prices { xi: lxi.mapv(f64::exp), c_tilde: lc.mapv(f64::exp), p: new.mapv(f64::exp) });
        }
        if damp == 1.0 {
            lp = new;
        } else {
            lp = &lp * (1.0 - damp) + &new * damp;
        }
    }
    Err(Error::NonConvergence {
        solver: "solve_prices",
        iterations: hist.len(),
        residual: hist.last().copied().unwrap_or(f64::NAN),
        context: trace(&hist),
    })
}

/// Trade shares implied by solved prices.
pub fn trade_share_array(prices: &Prices, fund: &PeriodFundamentals, cfg: &ModelConfig) -> Array3<f64> {
    let (n, jn) = fund.a.dim();
    let b = fund.b();
    Array3::from_shape_fn((n, n, jn), |(c, i, k)| {
        let u = prices.c_tilde[[i, k]].ln() + b[[c, i, k]].ln() - fund.a[[i, k]].ln();
        (-cfg.theta[k] * (u - prices.p[[c, k]].ln())).exp()
    })
}

/// Intermediate and capital-good cost shares plus the capital-good price.
fn composite_shares(p: &Array2<f64>, fund: &PeriodFundamentals, cfg: &ModelConfig) -> (Array3<f64>, Array2<f64>, Array1<f64>) {
    let (n, jn) = p.dim();
    let mut g_io = Array3::zeros((n, jn, jn));
    let mut g_k = Array2::zeros((n, jn));
    let mut pk = Array1::zeros(n);
    for c in 0..n {
        let prow: Vec<f64> = p.row(c).to_vec();
        for u in 0..jn {
            let kap: Vec<f64> = (0..jn).map(|h| fund.kappa_io[[c, u, h]]).collect();
            let g = composite_cost_shares(&prow, &kap, cfg.sigma_io[u]);
            for h in 0..jn {
                g_io[[c, u, h]] = g[h];
            }
        }
        let kk: Vec<f64> = fund.kappa_k.row(c).to_vec();
        let g = composite_cost_shares(&prow, &kk, cfg.sigma_k);
        for h in 0..jn {
            g_k[[c, h]] = g[h];
        }
        let lp: Vec<f64> = prow.iter().map(|v| v.ln()).collect();
        pk[c] = log_ces_index(&lp, &kk, cfg.sigma_k).exp();
    }
    (g_io, g_k, pk)
}

struct Income {
    y: Array2<f64>,
    t_tariff: Array1<f64>,
    tp: f64,
    ni: Array1<f64>,
    inv_value: Array1<f64>,
    e: Array1<f64>,
    c: Array1<f64>,
    omega: Array2<f64>,
    eps_bar: Array1<f64>,
}

fn income_block(
    x: &Array2<f64>,
    p: &Array2<f64>,
    pi: &Array3<f64>,
    f: Factors,
    rule: InvestmentRule,
    fund: &PeriodFundamentals,
    cfg: &ModelConfig,
) -> Result<Income> {
    let (n, jn) = x.dim();
    let y = gross_output(x, pi, &fund.tau);
    let t_tariff = tariff_revenue(x, pi, &fund.tau);
    let tp = portfolio_transfer(f.w, &fund.l, f.r, f.k, &t_tariff, &fund.phi);
    let ni = Array1::from_shape_fn(n, |c| {
        (1.0 - fund.phi[c]) * (f.w[c] * fund.l[c] + f.r[c] * f.k[c] + t_tariff[c]) + fund.l[c] * tp
    });
    if let Some(c) = ni.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::domain(
            "solve_spending",
            format!("national income of country {c} is non-positive ({}); check phi and rho", ni[c]),
        ));
    }
    let inv_value = match rule {
        InvestmentRule::SavingRate(rho) => &ni * rho,
        InvestmentRule::Level(v) => v.clone(),
    };
    let e = &ni - &inv_value;
    if let Some(c) = e.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::domain(
            "solve_spending",
            format!("consumption expenditure of country {c} is non-positive ({})", e[c]),
        ));
    }
    let prefs = Preferences::new(&cfg.epsilon, cfg.sigma, cfg.preference_family);
    let ns = NewtonSettings { tol: cfg.tol.newton, max_iter: cfg.tol.max_newton_iter };
    let mut c_agg = Array1::zeros(n);
    let mut omega = Array2::zeros((n, jn));
    let mut eps_bar = Array1::zeros(n);
    for c in 0..n {
        let prow: Vec<f64> = p.row(c).to_vec();
        let orow: Vec<f64> = fund.omega_shift.row(c).to_vec();
        let cc = newton_consumption(e[c], fund.l[c], &prow, &orow, &prefs, ns)?;
        let (sh, eb) = expenditure_shares(cc, fund.l[c], &prow, &orow, &prefs);
        c_agg[c] = cc;
        eps_bar[c] = eb;
        for k in 0..jn {
            omega[[c, k]] = sh[k];
        }
    }
    Ok(Income { y, t_tariff, tp, ni, inv_value, e, c: c_agg, omega, eps_bar })
}

/// Fixed point of the spending map at given prices and factor prices.
pub fn solve_spending(
    prices: &Prices,
    pi: &Array3<f64>,
    factors: Factors,
    rule: InvestmentRule,
    fund: &PeriodFundamentals,
    cfg: &ModelConfig,
    guess: Option<&Array2<f64>>,
) -> Result<Spending> {
    let (n, jn) = prices.p.dim();
    let (g_io, g_k, pk) = composite_shares(&prices.p, fund, cfg);
    let mut x = match guess {
        Some(g) => g.clone(),
        None => Array2::from_shape_fn((n, jn), |(c, _)| {
            (factors.w[c] * fund.l[c] + factors.r[c] * factors.k[c]) / jn as f64
        }),
    };
    let damp = cfg.damp.spending;
    let mut hist = Vec::new();
    for _ in 0..cfg.tol.max_spending_iter {
        let inc = income_block(&x, &prices.p, pi, factors, rule, fund, cfg)?;
        let new = spending_rhs(&inc.omega, &inc.e, &g_k, &inc.inv_value, &fund.gamma, &g_io, &inc.y);
        let diff = crate::num::max_log_diff(new.iter(), x.iter());
        hist.push(diff);
        if !diff.is_finite() {
            break;
        }
        x = if damp == 1.0 { new } else { &x * (1.0 - damp) + &new * damp };
        if diff <= cfg.tol.spending {
            let inc = income_block(&x, &prices.p, pi, factors, rule, fund, cfg)?;
            return Ok(Spending {
                x,
                y: inc.y,
                e: inc.e,
                c: inc.c,
                omega: inc.omega,
                eps_bar: inc.eps_bar,
                t_tariff: inc.t_tariff,
                tp: inc.tp,
                ni: inc.ni,
                inv_value: inc.inv_value,
                g_io,
                g_k,
                pk,
            });
        }
    }
    Err(Error::NonConvergence {
        solver: "solve_spending",
        iterations: hist.len(),
        residual: hist.last().copied().unwrap_or(f64::NAN),
        context: trace(&hist),
    })
}

/// How capital and the rental rate are determined in a solve.
#[derive(Debug, Clone)]
pub(crate) enum Closure<'a> {
    /// Capital and saving rate given; the rental follows from factor shares.
    Period { k: &'a Array1<f64>, rho: &'a Array1<f64> },
    /// Rental pinned to the capital-good price by the stationary Euler
    /// equation, `r = coef * P^K`; capital adjusts and investment replaces
    /// depreciation.
    Steady { coef: Array1<f64> },
}

/// Solution state carried between solves for warm starts.
#[derive(Debug, Clone)]
pub(crate) struct Warm<'a> {
    pub w: Option<&'a Array1<f64>>,
    pub p: Option<&'a Array2<f64>>,
    pub x: Option<&'a Array2<f64>>,
    pub ratio: Option<Array1<f64>>,
    pub r: Option<&'a Array1<f64>>,
}

impl<'a> Warm<'a> {
    pub fn none() -> Self {
        Self { w: None, p: None, x: None, ratio: None, r: None }
    }

    pub fn from_eq(eq: &'a PeriodEquilibrium, l: &Array1<f64>) -> Self {
        let ratio = Array1::from_shape_fn(eq.w.len(), |c| eq.r[c] * eq.k[c] / (eq.w[c] * l[c]));
        Self { w: Some(&eq.w), p: Some(&eq.p), x: Some(&eq.x), ratio: Some(ratio), r: Some(&eq.r) }
    }
}

/// Capital income over labor income implied by gross output.
fn factor_ratio(y: &Array2<f64>, fund: &PeriodFundamentals) -> (Array1<f64>, Array1<f64>) {
    let (n, jn) = y.dim();
    let mut lab = Array1::zeros(n);
    let mut cap = Array1::zeros(n);
    for c in 0..n {
        for k in 0..jn {
            let va = fund.gamma[[c, k]] * y[[c, k]];
            lab[c] += (1.0 - fund.alpha[[c, k]]) * va;
            cap[c] += fund.alpha[[c, k]] * va;
        }
    }
    (lab, cap)
}

pub(crate) fn solve_general(
    fund: &PeriodFundamentals,
    closure: &Closure,
    cfg: &ModelConfig,
    warm: Warm,
) -> Result<PeriodEquilibrium> {
    let n = fund.countries();
    let num = cfg.numeraire;
    if num >= n {
        return Err(Error::validation(format!("numeraire index {num} out of range for {n} countries")));
    }
    let mut w = warm.w.cloned().unwrap_or_else(|| Array1::ones(n));
    let w0 = w[num];
    w.mapv_inplace(|v| v / w0);
    let mut ratio = warm.ratio.clone().unwrap_or_else(|| fund.capital_labor_ratio_guess());
    let mut p_guess = warm.p.cloned();
    let mut x_guess = warm.x.cloned();
    let mut r_guess = warm.r.cloned();
    let mut hist = Vec::new();
    for _ in 0..cfg.tol.max_wage_iter {
        // Rental rate and capital for the current wage guess.
        let (r, k, prices) = match closure {
            Closure::Period { k, .. } => {
                let r = Array1::from_shape_fn(n, |c| ratio[c] * w[c] * fund.l[c] / k[c]);
                let prices = solve_prices(&w, &r, fund, cfg, p_guess.as_ref())?;
                (r, (*k).clone(), prices)
            }
            Closure::Steady { coef } => {
                let mut r = r_guess.clone().unwrap_or_else(|| coef.clone());
                let mut rh = Vec::new();
                let mut prices = None;
                for _ in 0..cfg.tol.max_rental_iter {
                    let pr = solve_prices(&w, &r, fund, cfg, p_guess.as_ref())?;
                    let (_, _, pk) = composite_shares(&pr.p, fund, cfg);
                    let r_new = coef * &pk;
                    let d = crate::num::max_log_diff(r_new.iter(), r.iter());
                    rh.push(d);
                    p_guess = Some(pr.p.clone());
                    r = r_new;
                    if d <= cfg.tol.rental {
                        prices = Some(solve_prices(&w, &r, fund, cfg, p_guess.as_ref())?);
                        break;
                    }
                }
                let prices = prices.ok_or_else(|| Error::NonConvergence {
                    solver: "steady-state rental loop",
                    iterations: rh.len(),
                    residual: rh.last().copied().unwrap_or(f64::NAN),
                    context: trace(&rh),
                })?;
                let k = Array1::from_shape_fn(n, |c| ratio[c] * w[c] * fund.l[c] / r[c]);
                r_guess = Some(r.clone());
                (r, k, prices)
            }
        };
        let pi = trade_share_array(&prices, fund, cfg);
        let factors = Factors { w: &w, r: &r, k: &k };
        let steady_inv;
        let rule = match closure {
            Closure::Period { rho, .. } => InvestmentRule::SavingRate(rho),
            Closure::Steady { .. } => {
                let (_, _, pk) = composite_shares(&prices.p, fund, cfg);
                steady_inv = Array1::from_shape_fn(n, |c| pk[c] * fund.delta[c] * k[c]);
                InvestmentRule::Level(&steady_inv)
            }
        };
        let sp = solve_spending(&prices, &pi, factors, rule, fund, cfg, x_guess.as_ref())?;
        let (lab, cap) = factor_ratio(&sp.y, fund);
        let implied = Array1::from_shape_fn(n, |c| lab[c] / fund.l[c]);
        let new_ratio = &cap / &lab;
        let dw = crate::num::max_log_diff(implied.iter(), w.iter());
        let dr = crate::num::max_log_diff(new_ratio.iter(), ratio.iter());
        let diff = dw.max(dr);
        hist.push(diff);
        if !diff.is_finite() {
            break;
        }
        if diff <= cfg.tol.wage {
            return Ok(assemble(fund, w, r, k, prices, pi, sp));
        }
        let mut grew = false;
        for c in 0..n {
            let f = implied[c] / w[c];
            if f > cfg.damp.wage_growth_cap || f < 1.0 / cfg.damp.wage_growth_cap {
                grew = true;
            }
            w[c] *= f.powf(cfg.damp.wage);
            ratio[c] *= (new_ratio[c] / ratio[c]).powf(cfg.damp.wage);
        }
        if grew {
            return Err(Error::NonConvergence {
                solver: "solve_period wage loop",
                iterations: hist.len(),
                residual: diff,
                context: "wage update exceeded the growth cap (divergence)".into(),
            });
        }
        let wn = w[num];
        w.mapv_inplace(|v| v / wn);
        p_guess = Some(prices.p);
        x_guess = Some(sp.x);
    }
    Err(Error::NonConvergence {
        solver: "solve_period wage loop",
        iterations: hist.len(),
        residual: hist.last().copied().unwrap_or(f64::NAN),
        context: trace(&hist),
    })
}

fn assemble(
    fund: &PeriodFundamentals,
    w: Array1<f64>,
    r: Array1<f64>,
    k: Array1<f64>,
    prices: Prices,
    pi: Array3<f64>,
    sp: Spending,
) -> PeriodEquilibrium {
    let va_share = value_added_shares(&fund.gamma, &sp.y);
    let deficit = trade_deficit(&sp.x, &pi, &fund.tau);
    let rho = &sp.inv_value / &sp.ni;
    PeriodEquilibrium {
        w,
        r,
        k,
        rho,
        c_tilde: prices.c_tilde,
        xi: prices.xi,
        p: prices.p,
        pk: sp.pk,
        pi,
        g_io: sp.g_io,
        g_k: sp.g_k,
        x: sp.x,
        y: sp.y,
        t_tariff: sp.t_tariff,
        tp: sp.tp,
        ni: sp.ni,
        e: sp.e,
        inv_value: sp.inv_value,
        c: sp.c,
        omega: sp.omega,
        eps_bar: sp.eps_bar,
        va_share,
        deficit,
    }
}

/// Solve the within-period equilibrium given predetermined capital and
/// saving rates. `warm` is a previously solved period used as the starting
/// point.
pub fn solve_period(inputs: &PeriodInputs, cfg: &ModelConfig, warm: Option<&PeriodEquilibrium>) -> Result<PeriodEquilibrium> {
    inputs.validate()?;
    let closure = Closure::Period { k: &inputs.k, rho: &inputs.rho };
    let w = match warm {
        Some(eq) if eq.w.len() == inputs.k.len() => Warm::from_eq(eq, &inputs.fund.l),
        _ => Warm::none(),
    };
    solve_general(&inputs.fund, &closure, cfg, w).map_err(|e| e.with_context(format!("period {}", inputs.t)))
}
