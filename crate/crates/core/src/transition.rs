//! Perfect-foresight transition paths.
//!
//! Given a guess for the saving rates, a forward pass solves every period in
//! turn and accumulates capital. Euler residuals are then evaluated on that
//! path and the saving rates are moved by `rho <- rho (1 + eta Z)`. The
//! horizon is the observed periods plus an extension over which fundamentals
//! stay at their terminal values; the period after the horizon is the
//! steady state.

use std::path::Path;

use ndarray::{Array1, Array2};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::fundamentals::{Fundamentals, PeriodFundamentals};
use crate::num::solve_spd;
use crate::model::{investment_requirement, next_capital, PeriodEquilibrium};
use crate::static_eq::{solve_period, PeriodInputs};
use crate::steady_state::{solve_steady_state, SteadyState};

/// Everything the outer loop needs.
#[derive(Debug, Clone)]
pub struct PathProblem {
    pub fund: Fundamentals,
    /// Number of solved periods: observed periods plus the extension.
    pub horizon: usize,
    pub k0: Array1<f64>,
    pub boundary: SteadyState,
    pub cfg: ModelConfig,
}

impl PathProblem {
    /// Build a problem from fundamentals, solving the boundary steady state
    /// under the terminal fundamentals.
    pub fn new(fund: Fundamentals, cfg: &ModelConfig) -> Result<Self> {
        let mut cfg = cfg.clone();
        cfg.validate()?;
        fund.validate()?;
        if cfg.extension < 1 {
            return Err(Error::validation("the steady-state extension must be at least one period"));
        }
        let boundary = solve_steady_state(&fund.terminal(), &cfg)?;
        let horizon = fund.n_periods() + cfg.extension;
        let k0 = fund.k0.clone();
        Ok(Self { fund, horizon, k0, boundary, cfg })
    }

    pub fn with_k0(mut self, k0: Array1<f64>) -> Self {
        self.k0 = k0;
        self
    }

    pub fn n(&self) -> usize {
        self.fund.n_countries()
    }

    /// Calendar label of solved period `t`; extension periods count on from
    /// the last observed year.
    pub fn year(&self, t: usize) -> i32 {
        let last = self.fund.n_periods() - 1;
        if t <= last {
            self.fund.periods[t]
        } else {
            self.fund.periods[last] + (t - last) as i32
        }
    }

    /// Saving rates of the boundary steady state repeated over the horizon.
    pub fn default_rho(&self) -> Array2<f64> {
        let n = self.n();
        Array2::from_shape_fn((n, self.horizon), |(c, _)| self.boundary.eq.rho[c])
    }
}

/// A solved (or partially solved) path.
#[derive(Debug, Clone)]
pub struct TransitionPath {
    pub eqs: Vec<PeriodEquilibrium>,
    /// Capital `[n, t]` for `t = 0..=horizon`.
    pub k: Array2<f64>,
    pub rho: Array2<f64>,
    /// Euler residuals `[n, t]`; empty until evaluated.
    pub z: Array2<f64>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

impl TransitionPath {
    pub fn horizon(&self) -> usize {
        self.eqs.len()
    }

    pub fn max_abs_z(&self) -> f64 {
        self.z.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Per-capita consumption `[n, t]`.
    pub fn consumption_per_capita(&self, fund: &Fundamentals) -> Array2<f64> {
        let n = self.k.nrows();
        Array2::from_shape_fn((n, self.horizon()), |(c, t)| self.eqs[t].c[c] / fund.period(t).l[c])
    }
}

/// Solve every period given saving rates, accumulating capital forward.
/// `warm` supplies per-period starting points from an earlier pass.
pub fn forward_pass(rho: &Array2<f64>, problem: &PathProblem, warm: Option<&[PeriodEquilibrium]>) -> Result<TransitionPath> {
    let n = problem.n();
    let h = problem.horizon;
    if rho.dim() != (n, h) {
        return Err(Error::validation(format!("saving-rate path must be {n}x{h}")));
    }
    if rho.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::validation("saving rates must lie in (0,1)"));
    }
    let mut k = Array2::zeros((n, h + 1));
    k.column_mut(0).assign(&problem.k0);
    let mut eqs: Vec<PeriodEquilibrium> = Vec::with_capacity(h);
    for t in 0..h {
        let fund = problem.fund.period(t);
        let inputs = PeriodInputs { t, k: k.column(t).to_owned(), rho: rho.column(t).to_owned(), fund };
        let start = warm.and_then(|w| w.get(t)).or(eqs.last());
        let eq = solve_period(&inputs, &problem.cfg, start)
            .map_err(|e| e.with_context(format!("year {}", problem.year(t))))?;
        for c in 0..n {
            let inv = eq.inv_value[c] / eq.pk[c];
            k[[c, t + 1]] = next_capital(k[[c, t]], inv, inputs.fund.delta[c], problem.cfg.lambda_adj);
        }
        eqs.push(eq);
    }
    Ok(TransitionPath { eqs, k, rho: rho.clone(), z: Array2::zeros((0, 0)), iterations: 0, residual_history: Vec::new() })
}

/// Values entering the Euler equation on the "next period" side.
struct NextPeriod<'a> {
    eq: &'a PeriodEquilibrium,
    fund: PeriodFundamentals,
}

/// Euler residuals `[n, t]` of a forward-pass path. The period after the
/// horizon is the boundary steady state, whose capital closes the last
/// adjustment-cost term.
pub fn euler_residuals(path: &TransitionPath, problem: &PathProblem) -> Result<Array2<f64>> {
    let n = problem.n();
    let h = path.horizon();
    let cfg = &problem.cfg;
    let mut z = Array2::zeros((n, h));
    for t in 0..h {
        let cur = &path.eqs[t];
        let f0 = problem.fund.period(t);
        let next = if t + 1 < h {
            NextPeriod { eq: &path.eqs[t + 1], fund: problem.fund.period(t + 1) }
        } else {
            NextPeriod { eq: &problem.boundary.eq, fund: problem.boundary.fund.clone() }
        };
        for c in 0..n {
            let k_t = path.k[[c, t]];
            let k_t1 = path.k[[c, t + 1]];
            let k_t2 = if t + 1 < h { path.k[[c, t + 2]] } else { problem.boundary.eq.k[c] };
            let cur_inv = investment_requirement(k_t1, k_t, f0.delta[c], cfg.lambda_adj)
                .map_err(|e| e.with_context(format!("country {c}, year {}", problem.year(t))))?;
            let nxt_inv = investment_requirement(k_t2, k_t1, next.fund.delta[c], cfg.lambda_adj)
                .map_err(|e| e.with_context(format!("country {c}, year {}", problem.year(t + 1))))?;
            let ret = (1.0 - next.fund.phi[c]) * next.eq.r[c] - next.eq.pk[c] * nxt_inv.phi2;
            let bracket = cfg.beta
                * (next.fund.zeta[c] / f0.zeta[c])
                * (next.fund.l[c] / f0.l[c])
                * (cur.e[c] / next.eq.e[c])
                * (cur.eps_bar[c] / next.eq.eps_bar[c])
                * ret
                / (cur.pk[c] * cur_inv.phi1);
            if !(bracket > 0.0) {
                return Err(Error::domain(
                    "euler_residuals",
                    format!("non-positive Euler bracket {bracket} at country {c}, year {}", problem.year(t)),
                ));
            }
            let growth = (next.eq.c[c] / cur.c[c]) * (f0.l[c] / next.fund.l[c]);
            z[[c, t]] = bracket.powf(1.0 / (cfg.psi - 1.0)) - growth;
        }
    }
    Ok(z)
}

/// Past iterates of the damped saving-rate map `g(rho) = rho (1 + eta Z)`,
/// mixed by Anderson acceleration.
struct Mixer {
    depth: usize,
    xs: Vec<Vec<f64>>,
    gs: Vec<Vec<f64>>,
}

impl Mixer {
    fn new(depth: usize) -> Self {
        Self { depth, xs: Vec::new(), gs: Vec::new() }
    }

    fn clear(&mut self) {
        self.xs.clear();
        self.gs.clear();
    }

    /// Record `(x, g(x))` and return the next iterate, or `None` when there
    /// is not enough history to mix.
    fn push(&mut self, x: Vec<f64>, g: Vec<f64>) -> Option<Vec<f64>> {
        if self.depth == 0 {
            return None;
        }
        self.xs.push(x);
        self.gs.push(g);
        if self.xs.len() > self.depth + 1 {
            self.xs.remove(0);
            self.gs.remove(0);
        }
        let m = self.xs.len() - 1;
        if m == 0 {
            return None;
        }
        let f = |k: usize| -> Vec<f64> { self.gs[k].iter().zip(&self.xs[k]).map(|(g, x)| g - x).collect() };
        let f_last = f(m);
        let df: Vec<Vec<f64>> = (0..m)
            .map(|k| {
                let fk = f(k + 1);
                let fp = f(k);
                fk.iter().zip(&fp).map(|(a, b)| a - b).collect()
            })
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut gram: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| dot(&df[i], &df[j])).collect()).collect();
        let scale = (0..m).map(|i| gram[i][i]).fold(0.0f64, f64::max);
        if !(scale > 0.0) {
            return None;
        }
        for (i, row) in gram.iter_mut().enumerate() {
            row[i] += 1e-10 * scale;
        }
        let rhs: Vec<f64> = df.iter().map(|d| dot(d, &f_last)).collect();
        let gamma = solve_spd(&gram, &rhs)?;
        let mut next = self.gs[m].clone();
        for (k, gk) in gamma.iter().enumerate() {
            for (i, v) in next.iter_mut().enumerate() {
                *v -= gk * (self.gs[k + 1][i] - self.gs[k][i]);
            }
        }
        next.iter().all(|v| v.is_finite()).then_some(next)
    }
}

/// Iterate forward passes and saving-rate updates until the Euler residuals
/// are within tolerance. `rho0` defaults to the boundary saving rates.
///
/// With `damp.anderson > 0` the update mixes recent iterates. A mixed step
/// that fails to solve or more than doubles the residual is discarded in
/// favour of the plain damped step, and the history restarts.
pub fn solve_transition(problem: &PathProblem, rho0: Option<Array2<f64>>) -> Result<TransitionPath> {
    let cfg = &problem.cfg;
    let mut rho = rho0.unwrap_or_else(|| problem.default_rho());
    rho.mapv_inplace(|v| v.clamp(cfg.rho_min, cfg.rho_max));
    let shape = rho.raw_dim();
    let eta0 = cfg.damp.eta;
    let mut eta = eta0;
    let mut hist: Vec<f64> = Vec::new();
    let mut warm: Option<Vec<PeriodEquilibrium>> = None;
    let mut calm = 0usize;
    let mut mixer = Mixer::new(cfg.damp.anderson);
    // Plain step and residual of the last accepted iterate, kept while a
    // mixed step is on trial.
    let mut fallback: Option<(Array2<f64>, f64)> = None;
    let mut accepted: Option<f64> = None;
    for it in 0..cfg.tol.max_outer_iter {
        let trial = forward_pass(&rho, problem, warm.as_deref()).and_then(|p| {
            let z = euler_residuals(&p, problem)?;
            Ok((p, z))
        });
        let (mut path, z, sup) = match (trial, fallback.take()) {
            (Ok((p, z)), fb) => {
                let sup = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                match fb {
                    Some((plain, prev)) if !(sup <= 2.0 * prev) => {
                        hist.push(sup);
                        mixer.clear();
                        rho = plain;
                        continue;
                    }
                    _ => (p, z, sup),
                }
            }
            (Err(_), Some((plain, _))) => {
                hist.push(f64::NAN);
                mixer.clear();
                rho = plain;
                continue;
            }
            (Err(e), None) => return Err(e),
        };
        hist.push(sup);
        if !sup.is_finite() {
            break;
        }
        if sup <= cfg.tol.euler {
            path.z = z;
            path.iterations = it + 1;
            path.residual_history = hist;
            return Ok(path);
        }
        match accepted {
            Some(p) if sup > p => {
                if mixer.xs.is_empty() || cfg.damp.anderson == 0 {
                    eta = (eta * 0.5).max(eta0 * 1e-3);
                }
                mixer.clear();
                calm = 0;
            }
            _ => {
                calm += 1;
                if calm >= 50 && eta < eta0 {
                    eta = (eta * 2.0).min(eta0);
                    mixer.clear();
                    calm = 0;
                }
            }
        }
        accepted = Some(sup);
        let plain = Array2::from_shape_fn(shape.clone(), |ix| {
            (rho[ix] * (1.0 + eta * z[ix])).clamp(cfg.rho_min, cfg.rho_max)
        });
        let x: Vec<f64> = rho.iter().copied().collect();
        let g: Vec<f64> = plain.iter().copied().collect();
        match mixer.push(x, g) {
            Some(mixed) => {
                let mixed = Array2::from_shape_vec(shape.clone(), mixed)
                    .expect("mixed iterate has the saving-rate shape")
                    .mapv(|v| v.clamp(cfg.rho_min, cfg.rho_max));
                fallback = Some((plain, sup));
                rho = mixed;
            }
            None => rho = plain,
        }
        warm = Some(path.eqs);
    }
    Err(Error::NonConvergence {
        solver: "solve_transition",
        iterations: hist.len(),
        residual: hist.last().copied().unwrap_or(f64::NAN),
        context: format!(
            "last Euler residuals [{}]",
            hist.iter().rev().take(5).rev().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    })
}

/// Saving-rate and capital paths in a columnar file with header
/// `variable,country,period,value`; `variable` is `rho` or `k`.
pub fn write_checkpoint(path: &Path, countries: &[String], rho: &Array2<f64>, k: &Array2<f64>) -> Result<()> {
    let io = |e: csv::Error| Error::Csv { path: path.display().to_string(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["variable", "country", "period", "value"]).map_err(io)?;
    for (name, arr) in [("rho", rho), ("k", k)] {
        for (c, cname) in countries.iter().enumerate() {
            for t in 0..arr.ncols() {
                w.write_record([name, cname.as_str(), &t.to_string(), &arr[[c, t]].to_string()]).map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    Ok(())
}

/// Read a checkpoint written by [`write_checkpoint`]. Returns `(rho, k)`.
pub fn read_checkpoint(path: &Path, countries: &[String]) -> Result<(Array2<f64>, Array2<f64>)> {
    let io = |e: csv::Error| Error::Csv { path: path.display().to_string(), source: e };
    let mut rdr = csv::Reader::from_path(path).map_err(io)?;
    let mut rows: Vec<(String, usize, usize, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(io)?;
        if rec.len() != 4 {
            return Err(Error::Data(format!("{}: expected 4 columns", path.display())));
        }
        let c = countries
            .iter()
            .position(|x| x == &rec[1])
            .ok_or_else(|| Error::Data(format!("{}: unknown country '{}'", path.display(), &rec[1])))?;
        let t: usize = rec[2].parse().map_err(|_| Error::Data(format!("{}: bad period '{}'", path.display(), &rec[2])))?;
        let v: f64 = rec[3].parse().map_err(|_| Error::Data(format!("{}: bad value '{}'", path.display(), &rec[3])))?;
        rows.push((rec[0].to_string(), c, t, v));
    }
    let len = |name: &str| rows.iter().filter(|r| r.0 == name).map(|r| r.2 + 1).max().unwrap_or(0);
    let n = countries.len();
    let mut rho = Array2::from_elem((n, len("rho")), f64::NAN);
    let mut k = Array2::from_elem((n, len("k")), f64::NAN);
    for (name, c, t, v) in rows {
        match name.as_str() {
            "rho" => rho[[c, t]] = v,
            "k" => k[[c, t]] = v,
            other => return Err(Error::Data(format!("{}: unknown variable '{other}'", path.display()))),
        }
    }
    if rho.iter().chain(k.iter()).any(|v| v.is_nan()) {
        return Err(Error::Data(format!("{}: checkpoint has missing cells", path.display())));
    }
    Ok((rho, k))
}

pub mod audit {
    //! Independent re-evaluation of every equilibrium condition on a path.

    use super::*;
    use crate::model::demand::{expenditure, expenditure_shares, Preferences};
    use crate::model::{
        capital_good_price, composite_cost_shares, gross_output, input_bundle_cost, intermediate_price_index,
        portfolio_transfer, sectoral_price_index, spending_rhs, tariff_revenue, trade_shares,
    };

    /// Sup-norm residual of one named condition.
    #[derive(Debug, Clone, PartialEq)]
    pub struct Condition {
        pub name: &'static str,
        pub residual: f64,
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    fn bump(v: &mut f64, x: f64) {
        if !(x <= *v) {
            *v = x;
        }
    }

    /// Residuals of the firm, household and market-clearing conditions for
    /// one solved period. Level conditions are relative; shares absolute.
    pub fn period_conditions(eq: &PeriodEquilibrium, f: &PeriodFundamentals, cfg: &ModelConfig) -> Result<Vec<Condition>> {
        let (n, jn) = eq.p.dim();
        let names = ["intermediate price", "input cost", "price index", "capital price", "rental",
            "trade shares", "intermediate shares", "capital shares", "national income", "expenditure split",
            "expenditure function", "consumption shares", "spending", "tariff revenue", "portfolio transfer",
            "gross output", "wage"];
        let mut r = vec![0.0f64; names.len()];
        let b = f.b();
        let prefs = Preferences::new(&cfg.epsilon, cfg.sigma, cfg.preference_family);
        let t_tariff = tariff_revenue(&eq.x, &eq.pi, &f.tau);
        let y = gross_output(&eq.x, &eq.pi, &f.tau);
        let tp = portfolio_transfer(&eq.w, &f.l, &eq.r, &eq.k, &t_tariff, &f.phi);
        for c in 0..n {
            let prow: Vec<f64> = eq.p.row(c).to_vec();
            for u in 0..jn {
                let kap: Vec<f64> = (0..jn).map(|h| f.kappa_io[[c, u, h]]).collect();
                bump(&mut r[0], rel(intermediate_price_index(&prow, &kap, cfg.sigma_io[u])?, eq.xi[[c, u]]));
                let ct = input_bundle_cost(eq.r[c], eq.w[c], eq.xi[[c, u]], f.gamma[[c, u]], f.alpha[[c, u]])?;
                bump(&mut r[1], rel(ct, eq.c_tilde[[c, u]]));
                let g = composite_cost_shares(&prow, &kap, cfg.sigma_io[u]);
                for h in 0..jn {
                    bump(&mut r[6], (g[h] - eq.g_io[[c, u, h]]).abs());
                }
                let ctil: Vec<f64> = (0..n).map(|i| eq.c_tilde[[i, u]]).collect();
                let arow: Vec<f64> = (0..n).map(|i| f.a[[i, u]]).collect();
                let brow: Vec<f64> = (0..n).map(|i| b[[c, i, u]]).collect();
                bump(&mut r[2], rel(sectoral_price_index(&ctil, &arow, &brow, cfg.theta[u])?, eq.p[[c, u]]));
                let sh = trade_shares(&ctil, &arow, &brow, cfg.theta[u], eq.p[[c, u]])?;
                for i in 0..n {
                    bump(&mut r[5], (sh[i] - eq.pi[[c, i, u]]).abs());
                }
            }
            let kk: Vec<f64> = f.kappa_k.row(c).to_vec();
            bump(&mut r[3], rel(capital_good_price(&prow, &kk, cfg.sigma_k)?, eq.pk[c]));
            let gk = composite_cost_shares(&prow, &kk, cfg.sigma_k);
            for h in 0..jn {
                bump(&mut r[7], (gk[h] - eq.g_k[[c, h]]).abs());
            }
            let cap: f64 = (0..jn).map(|h| f.gamma[[c, h]] * f.alpha[[c, h]] * y[[c, h]]).sum();
            let lab: f64 = (0..jn).map(|h| f.gamma[[c, h]] * (1.0 - f.alpha[[c, h]]) * y[[c, h]]).sum();
            bump(&mut r[4], rel(cap, eq.r[c] * eq.k[c]));
            bump(&mut r[16], rel(lab, eq.w[c] * f.l[c]));
            let ni = (1.0 - f.phi[c]) * (eq.w[c] * f.l[c] + eq.r[c] * eq.k[c] + t_tariff[c]) + f.l[c] * tp;
            bump(&mut r[8], rel(ni, eq.ni[c]));
            bump(&mut r[9], rel((1.0 - eq.rho[c]) * ni, eq.e[c]));
            let orow: Vec<f64> = f.omega_shift.row(c).to_vec();
            bump(&mut r[10], rel(expenditure(eq.c[c], f.l[c], &prow, &orow, &prefs), eq.e[c]));
            let (om, _) = expenditure_shares(eq.c[c], f.l[c], &prow, &orow, &prefs);
            for h in 0..jn {
                bump(&mut r[11], (om[h] - eq.omega[[c, h]]).abs());
            }
            bump(&mut r[13], if eq.t_tariff[c] == 0.0 { t_tariff[c].abs() } else { rel(t_tariff[c], eq.t_tariff[c]) });
        }
        let x_rhs = spending_rhs(&eq.omega, &eq.e, &eq.g_k, &eq.inv_value, &f.gamma, &eq.g_io, &y);
        for (a, bb) in x_rhs.iter().zip(eq.x.iter()) {
            bump(&mut r[12], rel(*a, *bb));
        }
        let scale = eq.ni.iter().sum::<f64>() / f.l.iter().sum::<f64>();
        r[14] = (tp - eq.tp).abs() / scale;
        for (a, bb) in y.iter().zip(eq.y.iter()) {
            bump(&mut r[15], rel(*a, *bb));
        }
        Ok(names.iter().zip(r).map(|(name, residual)| Condition { name, residual }).collect())
    }

    /// Sup-norm residuals of every condition along a converged path,
    /// including the law of motion and the Euler equation.
    pub fn audit_path(path: &TransitionPath, problem: &PathProblem) -> Result<Vec<Condition>> {
        let mut out: Vec<Condition> = Vec::new();
        for (t, eq) in path.eqs.iter().enumerate() {
            let f = problem.fund.period(t);
            let conds = period_conditions(eq, &f, &problem.cfg)?;
            if out.is_empty() {
                out = conds;
            } else {
                for (o, c) in out.iter_mut().zip(conds) {
                    bump(&mut o.residual, c.residual);
                }
            }
        }
        let mut lom = 0.0f64;
        for t in 0..path.horizon() {
            let f = problem.fund.period(t);
            for c in 0..problem.n() {
                let inv = path.eqs[t].inv_value[c] / path.eqs[t].pk[c];
                let kn = next_capital(path.k[[c, t]], inv, f.delta[c], problem.cfg.lambda_adj);
                bump(&mut lom, rel(kn, path.k[[c, t + 1]]));
            }
        }
        out.push(Condition { name: "capital law of motion", residual: lom });
        let z = euler_residuals(path, problem)?;
        out.push(Condition { name: "Euler", residual: z.iter().fold(0.0f64, |m, v| m.max(v.abs())) });
        Ok(out)
    }
}
