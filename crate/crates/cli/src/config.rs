//! TOML run configuration and built-in synthetic inputs.
//!
//! ```toml
//! data = "fundamentals"        # or: synthetic = "audit:1:10"
//! panel = "observed"           # input of `calibrate`
//!
//! [model]                      # any field of the model configuration
//! extension = 300
//! [model.tol]
//! euler = 1e-7
//!
//! [twocountry]
//! theta = 4.55
//! tau_max = 0.6
//! ```
//!
//! Relative paths are resolved against the directory of the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use structrade::calibration::{GravityFit, ObservedPanel};
use structrade::synthetic::{audit_world, calibration_world, developed_twin, observe, three_sectors};
use structrade::transition::{solve_transition, PathProblem};
use structrade::twocountry::TwoCountryInstance;
use structrade::{Error, Fundamentals, ModelConfig, PreferenceFamily, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub panel: Option<PathBuf>,
    pub synthetic: Option<String>,
    pub model: ModelConfig,
    pub twocountry: TwoCountrySpec,
}

impl FileConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| Error::validation(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data, &mut cfg.panel].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Serialization shell so the effective model configuration is written
/// under a `[model]` table, readable back as a configuration file.
#[derive(Serialize)]
pub struct Wrapped<'a> {
    pub model: &'a ModelConfig,
}

/// Parameters of the two-country sweep.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoCountrySpec {
    pub sectors: Vec<String>,
    /// Income exponents used by the nonhomothetic family.
    pub epsilon: Vec<f64>,
    pub theta: f64,
    pub sigma: f64,
    pub a_h: f64,
    pub a_f: f64,
    pub l_h: f64,
    pub l_f: f64,
    pub d_hf: f64,
    pub d_fh: f64,
    /// Foreign's tariffs on Home goods, by sector.
    pub tau_fh: Vec<f64>,
    /// Sectors whose Home tariff moves along the grid; empty means all.
    pub sweep_sectors: Vec<String>,
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
}

impl Default for TwoCountrySpec {
    fn default() -> Self {
        Self {
            sectors: three_sectors(),
            epsilon: vec![0.05, 1.0, 1.2],
            theta: 4.55,
            sigma: 0.5,
            a_h: 1.0,
            a_f: 1.0,
            l_h: 1.0,
            l_f: 1.0,
            d_hf: 1.5,
            d_fh: 1.5,
            tau_fh: Vec::new(),
            sweep_sectors: Vec::new(),
            tau_min: 0.0,
            tau_max: 0.6,
            points: 601,
        }
    }
}

impl TwoCountrySpec {
    pub fn instance(&self, family: PreferenceFamily) -> Result<TwoCountryInstance> {
        let j = self.sectors.len();
        if self.epsilon.len() != j {
            return Err(Error::validation(format!("twocountry: {j} sectors but {} income exponents", self.epsilon.len())));
        }
        let mut inst = TwoCountryInstance::symmetric(self.epsilon.clone(), self.theta, self.sigma, PreferenceFamily::NonhomotheticCes);
        inst.a_h = self.a_h;
        inst.a_f = self.a_f;
        inst.l_h = self.l_h;
        inst.l_f = self.l_f;
        inst.d_hf = self.d_hf;
        inst.d_fh = self.d_fh;
        if !self.tau_fh.is_empty() {
            if self.tau_fh.len() != j {
                return Err(Error::validation(format!("twocountry: tau_fh lists {} sectors, expected {j}", self.tau_fh.len())));
            }
            inst.tau_fh = self.tau_fh.clone();
        }
        let inst = inst.with_family(family, &self.epsilon);
        inst.validate()?;
        Ok(inst)
    }

    pub fn sweep_indices(&self) -> Result<Vec<usize>> {
        self.sweep_sectors
            .iter()
            .map(|s| {
                self.sectors
                    .iter()
                    .position(|x| x == s)
                    .ok_or_else(|| Error::validation(format!("twocountry: unknown sweep sector '{s}'")))
            })
            .collect()
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.tau_max > self.tau_min) || self.tau_min < 0.0 {
            return Err(Error::validation("twocountry: need points >= 2 and 0 <= tau_min < tau_max"));
        }
        let step = (self.tau_max - self.tau_min) / (self.points - 1) as f64;
        Ok((0..self.points).map(|k| self.tau_min + step * k as f64).collect())
    }
}

/// Built-in synthetic worlds selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Synthetic {
    Audit { seed: u64, years: usize },
    Twin { years: usize },
    Calibration { seed: u64, years: usize },
}

impl Synthetic {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::validation(format!("malformed synthetic world '{s}' (expected audit:SEED:YEARS, twin:YEARS or calibration:SEED:YEARS)"));
        let num = |x: &str| x.parse::<u64>().map_err(|_| bad());
        let years = |x: &str| -> Result<usize> {
            match x.parse::<usize>() {
                Ok(y) if y >= 2 => Ok(y),
                _ => Err(bad()),
            }
        };
        match parts.as_slice() {
            ["audit", seed, y] => Ok(Self::Audit { seed: num(seed)?, years: years(y)? }),
            ["twin", y] => Ok(Self::Twin { years: years(y)? }),
            ["calibration", seed, y] => Ok(Self::Calibration { seed: num(seed)?, years: years(y)? }),
            _ => Err(bad()),
        }
    }

    pub fn fundamentals(self) -> Result<Fundamentals> {
        match self {
            Self::Audit { seed, years } => audit_world(seed, years),
            Self::Twin { years } => developed_twin(years),
            Self::Calibration { seed, years } => Ok(calibration_world(seed, years)?.fund),
        }
    }

    /// Solve the world under `cfg` and return what an observer would record.
    pub fn panel(self, cfg: &ModelConfig) -> Result<ObservedPanel> {
        let (fund, cov, reference) = match self {
            Self::Calibration { seed, years } => {
                let w = calibration_world(seed, years)?;
                (w.fund, w.covariates, w.reference)
            }
            other => {
                let f = other.fundamentals()?;
                let cov = structrade::calibration::GravityCovariates::empty(f.n_countries(), f.n_periods());
                (f, cov, 0)
            }
        };
        let problem = PathProblem::new(fund, cfg)?;
        let path = solve_transition(&problem, None)?;
        Ok(observe(&problem.fund, &path, &cov, reference))
    }
}

/// Gravity estimates with header `sector,year,covariate,estimate`.
pub fn write_gravity(path: &Path, panel: &ObservedPanel, fits: &[GravityFit]) -> Result<()> {
    let err = |e: csv::Error| Error::Csv { path: path.display().to_string(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["sector", "year", "covariate", "estimate"]).map_err(err)?;
    for fit in fits {
        for (t, yf) in fit.years.iter().enumerate() {
            for (name, b) in yf.covariates.iter().zip(&yf.fit.beta) {
                w.write_record([panel.sectors[fit.sector].clone(), panel.years[t].to_string(), name.clone(), b.to_string()])
                    .map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}
