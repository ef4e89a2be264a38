//! Global model parameters and solver settings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Consumption preference family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PreferenceFamily {
    /// Nonhomothetic CES with sector-specific income exponents.
    #[default]
    #[serde(alias = "nh-ces")]
    NonhomotheticCes,
    /// Homothetic CES (all income exponents equal one).
    #[serde(alias = "h-ces")]
    HomotheticCes,
    /// Cobb-Douglas with the demand shifters used as expenditure weights.
    #[serde(alias = "cd")]
    CobbDouglas,
}

impl PreferenceFamily {
    /// Parse the short command-line names `nh-ces`, `h-ces` and `cd`.
    pub fn from_short(s: &str) -> Result<Self> {
        match s {
            "nh-ces" | "nonhomothetic-ces" => Ok(Self::NonhomotheticCes),
            "h-ces" | "homothetic-ces" => Ok(Self::HomotheticCes),
            "cd" | "cobb-douglas" => Ok(Self::CobbDouglas),
            other => Err(Error::validation(format!(
                "unknown preference family '{other}' (expected nh-ces, h-ces or cd)"
            ))),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Self::NonhomotheticCes => "nh-ces",
            Self::HomotheticCes => "h-ces",
            Self::CobbDouglas => "cd",
        }
    }
}

/// Convergence tolerances. Loop metrics are sup-norms of log changes except
/// where noted.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub price: f64,
    pub spending: f64,
    pub wage: f64,
    /// Absolute tolerance on the scalar expenditure residual (in logs).
    pub newton: f64,
    /// Sup-norm of the Euler residuals along a transition path.
    pub euler: f64,
    /// Rental-rate loop of the steady-state solver.
    pub rental: f64,
    pub max_price_iter: usize,
    pub max_spending_iter: usize,
    pub max_wage_iter: usize,
    pub max_rental_iter: usize,
    pub max_newton_iter: usize,
    pub max_outer_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            price: 1e-9,
            spending: 1e-9,
            wage: 1e-8,
            newton: 1e-13,
            euler: 1e-6,
            rental: 1e-10,
            max_price_iter: 5_000,
            max_spending_iter: 5_000,
            max_wage_iter: 5_000,
            max_rental_iter: 2_000,
            max_newton_iter: 100,
            max_outer_iter: 20_000,
        }
    }
}

/// Dampening factors for the fixed-point loops.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Dampening {
    /// Weight on the new iterate in the log-price update.
    pub price: f64,
    /// Weight on the new iterate in the spending update.
    pub spending: f64,
    /// Exponent on the implied/current wage ratio.
    pub wage: f64,
    /// Initial step size for the saving-rate update.
    pub eta: f64,
    /// Cap on a single multiplicative wage change, used to detect divergence.
    pub wage_growth_cap: f64,
    /// Number of past iterates mixed by Anderson acceleration of the
    /// saving-rate update; zero disables it.
    pub anderson: usize,
}

impl Default for Dampening {
    fn default() -> Self {
        Self { price: 1.0, spending: 1.0, wage: 0.5, eta: 0.1, wage_growth_cap: 1e6, anderson: 6 }
    }
}

/// Global scalar parameters of the quantitative model together with solver
/// settings. Construct through [`ModelConfig::validated`] (or call
/// [`ModelConfig::validate`]) so that the family-dependent restriction on the
/// income exponents is applied.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub beta: f64,
    pub psi: f64,
    pub sigma: f64,
    pub epsilon: Vec<f64>,
    pub theta: Vec<f64>,
    pub eta: f64,
    pub sigma_io: Vec<f64>,
    pub sigma_k: f64,
    pub lambda_adj: f64,
    pub preference_family: PreferenceFamily,
    /// Index of the country whose wage is the numeraire.
    pub numeraire: usize,
    /// Number of post-sample periods appended to a transition problem.
    pub extension: usize,
    /// Open interval the saving rates are clamped to during the outer loop.
    pub rho_min: f64,
    pub rho_max: f64,
    pub tol: Tolerances,
    pub damp: Dampening,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let theta_m = 4.55;
        Self {
            beta: 0.96,
            psi: 2.0,
            sigma: 0.5,
            epsilon: vec![0.05, 1.0, 1.2],
            theta: vec![8.11, theta_m, 0.75 * theta_m],
            eta: 2.0,
            sigma_io: vec![0.38; 3],
            sigma_k: 0.29,
            lambda_adj: 0.75,
            preference_family: PreferenceFamily::NonhomotheticCes,
            numeraire: 0,
            extension: 450,
            rho_min: 1e-4,
            rho_max: 1.0 - 1e-4,
            tol: Tolerances::default(),
            damp: Dampening::default(),
        }
    }
}

impl ModelConfig {
    /// Number of sectors implied by the per-sector parameter vectors.
    pub fn sectors(&self) -> usize {
        self.theta.len()
    }

    /// Return a validated copy with the preference family switched.
    pub fn with_family(&self, family: PreferenceFamily) -> Result<Self> {
        let mut c = self.clone();
        c.preference_family = family;
        c.validate()?;
        Ok(c)
    }

    /// Validate in place and apply the family-dependent restriction
    /// (income exponents forced to one outside the nonhomothetic family).
    pub fn validate(&mut self) -> Result<()> {
        let j = self.theta.len();
        if j == 0 {
            return Err(Error::validation("theta must list at least one sector"));
        }
        if self.epsilon.len() != j || self.sigma_io.len() != j {
            return Err(Error::validation(format!(
                "per-sector parameter lengths disagree: theta {}, epsilon {}, sigma_io {}",
                j,
                self.epsilon.len(),
                self.sigma_io.len()
            )));
        }
        check_open(self.beta, 0.0, 1.0, "beta")?;
        if !(self.psi > 1.0) || !self.psi.is_finite() {
            return Err(Error::validation(format!("psi must exceed 1, got {}", self.psi)));
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(Error::validation(format!("sigma must lie in (0,1], got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.lambda_adj) || self.lambda_adj == 0.0 {
            return Err(Error::validation(format!(
                "lambda_adj must lie in (0,1], got {}",
                self.lambda_adj
            )));
        }
        for (k, &th) in self.theta.iter().enumerate() {
            if !(th > 0.0) || !th.is_finite() {
                return Err(Error::validation(format!("theta[{k}] must be positive, got {th}")));
            }
            if th + 1.0 - self.eta <= 0.0 {
                return Err(Error::validation(format!(
                    "theta[{k}] + 1 - eta must be positive (theta {th}, eta {})",
                    self.eta
                )));
            }
        }
        for (k, &s) in self.sigma_io.iter().enumerate() {
            if !(s > 0.0) || s == 1.0 || !s.is_finite() {
                return Err(Error::validation(format!(
                    "sigma_io[{k}] must be positive and different from 1, got {s}"
                )));
            }
        }
        if !(self.sigma_k > 0.0) || self.sigma_k == 1.0 {
            return Err(Error::validation(format!(
                "sigma_k must be positive and different from 1, got {}",
                self.sigma_k
            )));
        }
        for (k, &e) in self.epsilon.iter().enumerate() {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::validation(format!("epsilon[{k}] must be positive, got {e}")));
            }
        }
        if self.eta <= 0.0 {
            return Err(Error::validation("eta must be positive"));
        }
        if !(self.rho_min > 0.0 && self.rho_min < self.rho_max && self.rho_max < 1.0) {
            return Err(Error::validation("rho bounds must satisfy 0 < rho_min < rho_max < 1"));
        }
        if self.damp.wage <= 0.0 || self.damp.wage > 1.0 {
            return Err(Error::validation("wage dampening must lie in (0,1]"));
        }
        if self.damp.price <= 0.0 || self.damp.price > 1.0 {
            return Err(Error::validation("price dampening must lie in (0,1]"));
        }
        if self.damp.spending <= 0.0 || self.damp.spending > 1.0 {
            return Err(Error::validation("spending dampening must lie in (0,1]"));
        }
        if self.damp.eta <= 0.0 {
            return Err(Error::validation("eta step size must be positive"));
        }
        if self.preference_family != PreferenceFamily::NonhomotheticCes {
            self.epsilon.iter_mut().for_each(|e| *e = 1.0);
        }
        Ok(())
    }

    pub fn validated(mut self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// True when demand is evaluated through the Cobb-Douglas branch. A CES
    /// family with sigma exactly one is routed there as well.
    pub fn uses_cobb_douglas(&self) -> bool {
        self.preference_family == PreferenceFamily::CobbDouglas || self.sigma == 1.0
    }
}

fn check_open(x: f64, lo: f64, hi: f64, name: &str) -> Result<()> {
    if x > lo && x < hi {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} must lie in ({lo},{hi}), got {x}")))
    }
}
