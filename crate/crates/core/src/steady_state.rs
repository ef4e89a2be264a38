//! Stationary equilibrium under time-invariant fundamentals.
//!
//! Wages form the outer loop, the rental rate (pinned to the capital-good
//! price by the stationary Euler condition) the middle one, and prices the
//! inner one. Capital is whatever stock makes capital income consistent with
//! that rental rate, and investment just replaces depreciation.

use ndarray::Array1;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::fundamentals::PeriodFundamentals;
use crate::model::PeriodEquilibrium;
use crate::static_eq::{solve_general, Closure, Warm};

/// A solved steady state together with the fundamentals it was solved for.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub eq: PeriodEquilibrium,
    pub fund: PeriodFundamentals,
}

impl SteadyState {
    pub fn k(&self) -> &Array1<f64> {
        &self.eq.k
    }

    /// Saving rates `P^K delta K / NI`.
    pub fn rho(&self) -> &Array1<f64> {
        &self.eq.rho
    }
}

/// Ratio `r / P^K` implied by the stationary Euler equation,
/// `[1 - beta (1 - lambda delta)] / (beta (1 - phi) lambda)`.
pub fn rental_price_ratio(beta: f64, lambda: f64, delta: f64, phi: f64) -> f64 {
    (1.0 - beta * (1.0 - lambda * delta)) / (beta * (1.0 - phi) * lambda)
}

pub fn solve_steady_state(fund: &PeriodFundamentals, cfg: &ModelConfig) -> Result<SteadyState> {
    solve_steady_state_from(fund, cfg, None)
}

/// Steady state with an optional warm start from a nearby equilibrium.
pub fn solve_steady_state_from(
    fund: &PeriodFundamentals,
    cfg: &ModelConfig,
    warm: Option<&PeriodEquilibrium>,
) -> Result<SteadyState> {
    let n = fund.countries();
    if fund.phi.iter().any(|&p| p >= 1.0) {
        return Err(Error::validation("steady state requires phi < 1 in every country"));
    }
    let coef = Array1::from_shape_fn(n, |c| rental_price_ratio(cfg.beta, cfg.lambda_adj, fund.delta[c], fund.phi[c]));
    let closure = Closure::Steady { coef };
    let w = match warm {
        Some(eq) if eq.w.len() == n => Warm::from_eq(eq, &fund.l),
        _ => Warm::none(),
    };
    let eq = solve_general(fund, &closure, cfg, w).map_err(|e| e.with_context("steady state"))?;
    Ok(SteadyState { eq, fund: fund.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundamentals::Fundamentals;
    use crate::model::next_capital;
    use crate::static_eq::{solve_period, PeriodInputs};

    fn names(p: &str, k: usize) -> Vec<String> {
        (0..k).map(|i| format!("{p}{i}")).collect()
    }

    #[test]
    fn one_country_one_sector_closed_form() {
        let mut f = Fundamentals::uniform(names("c", 1), names("s", 1), vec![1]);
        f.gamma.fill(1.0);
        f.a.fill(1.3);
        f.l.fill(2.0);
        let mut cfg = ModelConfig::default();
        cfg.epsilon = vec![1.0];
        cfg.theta = vec![4.0];
        cfg.sigma_io = vec![0.38];
        let cfg = cfg.validated().unwrap();
        let ss = solve_steady_state(&f.period(0), &cfg).unwrap();
        // P = P^K = r^a w^(1-a) / A with w = 1 and r = m P^K, so r^(1-a) = m / A.
        let (a, m) = (0.35, rental_price_ratio(0.96, 0.75, 0.06, 0.0));
        let r = (m / 1.3f64).powf(1.0 / (1.0 - a));
        let k = a / (1.0 - a) * 2.0 / r;
        assert!((ss.eq.r[0] / r - 1.0).abs() < 1e-9);
        assert!((ss.eq.k[0] / k - 1.0).abs() < 1e-8);
    }

    #[test]
    fn symmetric_countries_have_zero_deficits() {
        let mut f = Fundamentals::uniform(names("c", 2), names("s", 3), vec![1]);
        f.d.fill(1.6);
        for c in 0..2 {
            for k in 0..3 {
                f.d[[c, c, k, 0]] = 1.0;
            }
        }
        let cfg = ModelConfig::default().validated().unwrap();
        let ss = solve_steady_state(&f.period(0), &cfg).unwrap();
        assert!((ss.eq.k[0] - ss.eq.k[1]).abs() < 1e-8);
        assert!(ss.eq.deficit.iter().all(|d| d.abs() < 1e-9));
    }

    #[test]
    fn stationary_under_period_solver() {
        let mut f = Fundamentals::uniform(names("c", 3), names("s", 3), vec![1]);
        for c in 0..3 {
            for k in 0..3 {
                f.a[[c, k, 0]] = 0.8 + 0.15 * ((c * 3 + k) % 4) as f64;
                for i in 0..3 {
                    if i != c {
                        f.d[[c, i, k, 0]] = 1.8;
                        f.tau[[c, i, k, 0]] = 0.04;
                    }
                }
            }
            f.phi[[c, 0]] = [0.01, -0.02, 0.01][c];
            f.l[[c, 0]] = [1.0, 2.0, 0.7][c];
        }
        let cfg = ModelConfig::default().validated().unwrap();
        let pf = f.period(0);
        let ss = solve_steady_state(&pf, &cfg).unwrap();
        let inp = PeriodInputs { t: 0, k: ss.eq.k.clone(), rho: ss.eq.rho.clone(), fund: pf.clone() };
        let eq = solve_period(&inp, &cfg, Some(&ss.eq)).unwrap();
        for c in 0..3 {
            assert!((eq.w[c] / ss.eq.w[c] - 1.0).abs() < 1e-7);
            assert!((eq.c[c] / ss.eq.c[c] - 1.0).abs() < 1e-7);
            let inv = eq.inv_value[c] / eq.pk[c];
            let kn = next_capital(eq.k[c], inv, pf.delta[c], cfg.lambda_adj);
            assert!((kn / eq.k[c] - 1.0).abs() < 1e-7);
            let ratio = eq.r[c] * eq.k[c] / (eq.w[c] * pf.l[c]);
            assert!((ratio - 0.35 / 0.65).abs() < 1e-7);
        }
    }
}
