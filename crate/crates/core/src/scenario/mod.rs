//! Tariff counterfactuals.
//!
//! A [`Scenario`] is a list of additive tariff changes over sets of
//! importers, exporters, sectors and years, announced as a surprise in
//! `surprise_year`. The counterfactual keeps the baseline history up to the
//! surprise, inherits the baseline capital stock in that year and is
//! re-solved under perfect foresight from then on. Reports compare the two
//! paths period by period and summarize lifetime welfare per country.

pub mod text;
pub mod welfare;

use std::borrow::Cow;
use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, Array3, Array4, Axis};

use crate::calibration::{backout_zeta, invert_omega, EulerData};
use crate::config::{ModelConfig, PreferenceFamily};
use crate::error::{Error, Result};
use crate::fundamentals::Fundamentals;
use crate::io::{write_rows, LongRow};
use crate::steady_state::SteadyState;
use crate::transition::{solve_transition, PathProblem, TransitionPath};

pub use welfare::{discounted_utility, welfare_equivalent, WelfareSeries};

/// Number of periods covered by a report unless the scenario says otherwise.
pub const DEFAULT_REPORT_YEARS: usize = 50;

/// Countries or sectors an override applies to.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    All,
    Names(Vec<String>),
}

impl Selection {
    fn resolve(&self, labels: &[String], what: &str) -> Result<Vec<bool>> {
        match self {
            Selection::All => Ok(vec![true; labels.len()]),
            Selection::Names(names) => {
                let mut mask = vec![false; labels.len()];
                for name in names {
                    let i = labels
                        .iter()
                        .position(|l| l == name)
                        .ok_or_else(|| Error::validation(format!("scenario names unknown {what} '{name}'")))?;
                    mask[i] = true;
                }
                Ok(mask)
            }
        }
    }
}

/// Inclusive calendar range; `to = None` runs through the last observed
/// year and therefore persists into the steady state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearRange {
    pub from: i32,
    pub to: Option<i32>,
}

impl YearRange {
    pub fn contains(&self, year: i32) -> bool {
        year >= self.from && self.to.map_or(true, |t| year <= t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TariffOverride {
    pub importers: Selection,
    pub exporters: Selection,
    pub sectors: Selection,
    pub years: YearRange,
    /// Additive change in percentage points (20 means `tau += 0.2`).
    pub change_pp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub surprise_year: i32,
    /// Preference families to run; empty means the configured family.
    pub families: Vec<PreferenceFamily>,
    /// Re-fit demand and intertemporal shifters to the baseline path when a
    /// family differs from the configured one.
    pub recalibrate: bool,
    pub report_years: usize,
    pub overrides: Vec<TariffOverride>,
}

impl Scenario {
    /// A scenario without overrides.
    pub fn null(name: &str, surprise_year: i32) -> Self {
        Self {
            name: name.into(),
            surprise_year,
            families: Vec::new(),
            recalibrate: true,
            report_years: DEFAULT_REPORT_YEARS,
            overrides: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        text::parse(text)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        Self::parse(&s).map_err(|e| e.with_context(path.display().to_string()))
    }

    pub fn render(&self) -> String {
        text::render(self)
    }

    /// The families to run, falling back to `default`.
    pub fn families_or(&self, default: PreferenceFamily) -> Vec<PreferenceFamily> {
        if self.families.is_empty() {
            vec![default]
        } else {
            self.families.clone()
        }
    }
}

fn surprise_index(fund: &Fundamentals, sc: &Scenario) -> Result<usize> {
    fund.periods.iter().position(|&y| y == sc.surprise_year).ok_or_else(|| {
        Error::validation(format!(
            "surprise year {} is not an observed year ({}..={})",
            sc.surprise_year,
            fund.periods[0],
            fund.periods[fund.n_periods() - 1]
        ))
    })
}

/// Cells `[importer, exporter, sector, period]` touched by one override.
/// Domestic cells are never touched.
pub fn override_mask(fund: &Fundamentals, o: &TariffOverride) -> Result<Array4<bool>> {
    let (n, j, t) = (fund.n_countries(), fund.n_sectors(), fund.n_periods());
    let imp = o.importers.resolve(&fund.countries, "importer")?;
    let exp = o.exporters.resolve(&fund.countries, "exporter")?;
    let sec = o.sectors.resolve(&fund.sectors, "sector")?;
    let last = fund.periods[t - 1];
    if o.years.from > last {
        return Err(Error::validation(format!("override starts in {} after the last observed year {last}", o.years.from)));
    }
    if let Some(to) = o.years.to {
        if to > last {
            return Err(Error::validation(format!(
                "override ends in {to} after the last observed year {last}; use an open range '{}..' for a permanent change",
                o.years.from
            )));
        }
    }
    Ok(Array4::from_shape_fn((n, n, j, t), |(a, b, k, q)| {
        a != b && imp[a] && exp[b] && sec[k] && o.years.contains(fund.periods[q])
    }))
}

/// Baseline fundamentals with the scenario's tariff changes applied.
pub fn apply_scenario(base: &Fundamentals, sc: &Scenario) -> Result<Fundamentals> {
    surprise_index(base, sc)?;
    let mut f = base.clone();
    for (i, o) in sc.overrides.iter().enumerate() {
        if o.years.from < sc.surprise_year {
            return Err(Error::validation(format!(
                "override {} starts in {}, before the surprise year {}",
                i + 1,
                o.years.from,
                sc.surprise_year
            )));
        }
        let mask = override_mask(base, o)?;
        let dt = o.change_pp / 100.0;
        ndarray::Zip::from(&mut f.tau).and(&mask).for_each(|tau, &m| {
            if m {
                *tau += dt;
            }
        });
    }
    if let Some(((a, b, k, q), v)) = f.tau.indexed_iter().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::validation(format!(
            "scenario drives the tariff of {} on {} {} in {} to {v}",
            f.countries[a], f.countries[b], f.sectors[k], f.periods[q]
        )));
    }
    Ok(f)
}

/// A solved baseline path and the problem it solves.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub problem: PathProblem,
    pub path: TransitionPath,
}

impl Baseline {
    pub fn solve(fund: Fundamentals, cfg: &ModelConfig, rho0: Option<Array2<f64>>) -> Result<Self> {
        let problem = PathProblem::new(fund, cfg)?;
        let path = solve_transition(&problem, rho0)?;
        Ok(Self { problem, path })
    }

    pub fn family(&self) -> PreferenceFamily {
        self.problem.cfg.preference_family
    }

    pub fn welfare_series(&self) -> WelfareSeries {
        WelfareSeries::from_path(&self.path, &self.problem.fund, &self.problem.boundary)
    }
}

/// Fundamentals under which `family` reproduces the baseline's observed
/// years: demand shifters are inverted from the baseline prices, spending
/// and shares, and the intertemporal shifters from its Euler equations.
pub fn recalibrate_family(base: &Baseline, family: PreferenceFamily) -> Result<Fundamentals> {
    let cfg = base.problem.cfg.with_family(family)?;
    let f = &base.problem.fund;
    let eqs = &base.path.eqs;
    let (n, j, t) = (f.n_countries(), f.n_sectors(), f.n_periods());
    let e = Array2::from_shape_fn((n, t), |(a, q)| eqs[q].e[a]);
    let r = Array2::from_shape_fn((n, t), |(a, q)| eqs[q].r[a]);
    let pk = Array2::from_shape_fn((n, t), |(a, q)| eqs[q].pk[a]);
    let p = Array3::from_shape_fn((n, j, t), |(a, k, q)| eqs[q].p[[a, k]]);
    let shares = Array3::from_shape_fn((n, j, t), |(a, k, q)| eqs[q].omega[[a, k]]);
    let inv = invert_omega(&e, &f.l, &p, &shares, &cfg.epsilon, cfg.sigma, family)?;
    let data = EulerData {
        c: &inv.c,
        l: &f.l,
        e: &e,
        eps_bar: &inv.eps_bar,
        r: &r,
        pk: &pk,
        k: &base.path.k,
        phi: &f.phi,
        delta: &f.delta,
    };
    let zeta = backout_zeta(&data, &cfg)?;
    let mut out = f.clone();
    out.omega_shift = inv.omega_shift;
    out.zeta = zeta;
    Ok(out)
}

/// The baseline re-expressed under another preference family, either with
/// recalibrated shifters or with the original fundamentals.
pub fn family_baseline(base: &Baseline, family: PreferenceFamily, recalibrate: bool) -> Result<Baseline> {
    if family == base.family() {
        return Ok(base.clone());
    }
    let cfg = base.problem.cfg.with_family(family)?;
    let fund = if recalibrate { recalibrate_family(base, family)? } else { base.problem.fund.clone() };
    Baseline::solve(fund, &cfg, Some(base.path.rho.clone()))
}

/// A counterfactual path over the full baseline horizon.
#[derive(Debug, Clone)]
pub struct Counterfactual {
    /// Scenario fundamentals over all observed years.
    pub fund: Fundamentals,
    /// Index of the surprise period.
    pub t0: usize,
    /// Baseline periods before `t0` followed by the re-solved periods.
    pub path: TransitionPath,
    pub boundary: SteadyState,
}

impl Counterfactual {
    pub fn welfare_series(&self) -> WelfareSeries {
        WelfareSeries::from_path(&self.path, &self.fund, &self.boundary)
    }
}

/// Solve the scenario against a baseline. Periods before the surprise are
/// copied from the baseline; a scenario that changes nothing returns the
/// baseline path itself.
pub fn solve_counterfactual(base: &Baseline, sc: &Scenario) -> Result<Counterfactual> {
    let bf = &base.problem.fund;
    let fund = apply_scenario(bf, sc)?;
    let t0 = surprise_index(bf, sc)?;
    if fund.tau == bf.tau {
        return Ok(Counterfactual { fund, t0, path: base.path.clone(), boundary: base.problem.boundary.clone() });
    }
    let k0 = base.path.k.column(t0).to_owned();
    let problem = PathProblem::new(fund.from_period(t0), &base.problem.cfg)?.with_k0(k0);
    let guess = base.path.rho.slice(s![.., t0..]).to_owned();
    let tail = solve_transition(&problem, Some(guess))
        .map_err(|e| e.with_context(format!("counterfactual '{}'", sc.name)))?;
    let mut eqs = base.path.eqs[..t0].to_vec();
    eqs.extend(tail.eqs);
    let cat = |a: &Array2<f64>, b: &Array2<f64>| -> Array2<f64> {
        if b.ncols() == 0 {
            return a.clone();
        }
        concatenate![Axis(1), a.slice(s![.., ..t0]), b.view()]
    };
    let path = TransitionPath {
        eqs,
        k: cat(&base.path.k, &tail.k),
        rho: cat(&base.path.rho, &tail.rho),
        z: cat(&base.path.z, &tail.z),
        iterations: tail.iterations,
        residual_history: tail.residual_history,
    };
    Ok(Counterfactual { fund, t0, path, boundary: problem.boundary })
}

/// Period-by-period differences between a counterfactual and its baseline
/// together with lifetime welfare.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub scenario: String,
    pub family: PreferenceFamily,
    pub countries: Vec<String>,
    pub sectors: Vec<String>,
    /// Calendar labels of the reported periods.
    pub years: Vec<i32>,
    pub t0: usize,
    /// Percent change in real per-capita consumption, `[n, t]`.
    pub d_consumption: Array2<f64>,
    /// Percentage-point change in the saving rate, `[n, t]`.
    pub d_saving: Array2<f64>,
    /// Percentage-point change in consumption shares, `[n, j, t]`.
    pub d_omega: Array3<f64>,
    /// Percentage-point change in value-added shares, `[n, j, t]`.
    pub d_va: Array3<f64>,
    /// Consumption-equivalent welfare change in percent, `[n]`.
    pub welfare: Array1<f64>,
}

/// Build the report for an already solved counterfactual.
pub fn compare(base: &Baseline, cf: &Counterfactual, sc: &Scenario) -> Result<ComparisonReport> {
    let f = &base.problem.fund;
    let (n, j) = (f.n_countries(), f.n_sectors());
    let h = base.path.horizon();
    if cf.path.horizon() != h {
        return Err(Error::validation(format!("counterfactual covers {} periods, baseline {h}", cf.path.horizon())));
    }
    let t = h.min(sc.report_years);
    let (b, c) = (&base.path.eqs, &cf.path.eqs);
    let welfare = welfare_equivalent(&base.welfare_series(), &cf.welfare_series(), &base.problem.cfg, cf.t0)?;
    Ok(ComparisonReport {
        scenario: sc.name.clone(),
        family: base.family(),
        countries: f.countries.clone(),
        sectors: f.sectors.clone(),
        years: (0..t).map(|q| base.problem.year(q)).collect(),
        t0: cf.t0,
        // Population is common to both paths, so the per-capita ratio is
        // the ratio of aggregates.
        d_consumption: Array2::from_shape_fn((n, t), |(a, q)| 100.0 * (c[q].c[a] / b[q].c[a] - 1.0)),
        d_saving: Array2::from_shape_fn((n, t), |(a, q)| 100.0 * (c[q].rho[a] - b[q].rho[a])),
        d_omega: Array3::from_shape_fn((n, j, t), |(a, k, q)| 100.0 * (c[q].omega[[a, k]] - b[q].omega[[a, k]])),
        d_va: Array3::from_shape_fn((n, j, t), |(a, k, q)| 100.0 * (c[q].va_share[[a, k]] - b[q].va_share[[a, k]])),
        welfare,
    })
}

/// Solve the scenario against `base` and report.
pub fn run_comparison(base: &Baseline, sc: &Scenario) -> Result<ComparisonReport> {
    let cf = solve_counterfactual(base, sc)?;
    compare(base, &cf, sc)
}

/// Reports of one scenario under each requested family.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub baseline: Baseline,
    pub reports: Vec<ComparisonReport>,
}

/// Solve the baseline under `cfg`, then the scenario under every family it
/// lists.
pub fn run_scenario(fund: Fundamentals, cfg: &ModelConfig, sc: &Scenario) -> Result<ScenarioRun> {
    surprise_index(&fund, sc)?;
    let baseline = Baseline::solve(fund, cfg, None).map_err(|e| e.with_context("baseline"))?;
    let mut reports = Vec::new();
    for family in sc.families_or(cfg.preference_family) {
        let fb: Cow<Baseline> = if family == baseline.family() {
            Cow::Borrowed(&baseline)
        } else {
            Cow::Owned(
                family_baseline(&baseline, family, sc.recalibrate)
                    .map_err(|e| e.with_context(format!("{} baseline", family.short_name())))?,
            )
        };
        reports.push(run_comparison(&fb, sc)?);
    }
    Ok(ScenarioRun { baseline, reports })
}

fn io_err(dir: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io { path: dir.display().to_string(), source: e }
}

fn row(country: &str, sector: &str, year: Option<i32>, value: f64) -> LongRow {
    LongRow { country: country.into(), partner: String::new(), sector: sector.into(), year, value }
}

/// Write one report as long-format CSV files into `dir`: `consumption.csv`,
/// `saving_rate.csv`, `omega.csv`, `va.csv` and `welfare.csv`.
pub fn write_report(dir: &Path, r: &ComparisonReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let (n, j, t) = (r.countries.len(), r.sectors.len(), r.years.len());
    let mut cons = Vec::with_capacity(n * t);
    let mut save = Vec::with_capacity(n * t);
    let mut om = Vec::with_capacity(n * j * t);
    let mut va = Vec::with_capacity(n * j * t);
    for (a, cn) in r.countries.iter().enumerate() {
        for (q, &y) in r.years.iter().enumerate() {
            cons.push(row(cn, "", Some(y), r.d_consumption[[a, q]]));
            save.push(row(cn, "", Some(y), r.d_saving[[a, q]]));
            for (k, sn) in r.sectors.iter().enumerate() {
                om.push(row(cn, sn, Some(y), r.d_omega[[a, k, q]]));
                va.push(row(cn, sn, Some(y), r.d_va[[a, k, q]]));
            }
        }
    }
    let welfare: Vec<LongRow> = r.countries.iter().zip(r.welfare.iter()).map(|(c, v)| row(c, "", None, *v)).collect();
    write_rows(&dir.join("consumption.csv"), &cons)?;
    write_rows(&dir.join("saving_rate.csv"), &save)?;
    write_rows(&dir.join("omega.csv"), &om)?;
    write_rows(&dir.join("va.csv"), &va)?;
    write_rows(&dir.join("welfare.csv"), &welfare)
}

/// Welfare table with one row per country and one column per family.
pub fn write_summary(path: &Path, reports: &[ComparisonReport]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv { path: path.display().to_string(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["country".to_string()];
    header.extend(reports.iter().map(|r| format!("welfare_{}", r.family.short_name())));
    w.write_record(&header).map_err(csv_err)?;
    if let Some(first) = reports.first() {
        for (a, c) in first.countries.iter().enumerate() {
            let mut rec = vec![c.clone()];
            rec.extend(reports.iter().map(|r| r.welfare[a].to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

/// Write every report of a run under `dir/<family>/` plus `dir/summary.csv`.
pub fn write_run(dir: &Path, reports: &[ComparisonReport]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    for r in reports {
        write_report(&dir.join(r.family.short_name()), r)?;
    }
    write_summary(&dir.join("summary.csv"), reports)
}
