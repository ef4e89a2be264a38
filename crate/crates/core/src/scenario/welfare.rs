//! Consumption-equivalent welfare.
//!
//! Lifetime utility of country `n` from period `t0` on is proportional to
//!
//! ```text
//! V_n = sum_{t=t0}^{H-1} beta^(t-t0) zeta_t L_t c_t^(1-psi)
//!       + beta^(H-t0) / (1-beta) * zeta_ss L_ss c_ss^(1-psi)
//! ```
//!
//! with `c = C/L`; the second term is the steady state reached after the
//! solved horizon. The consumption equivalent is
//! `lambda = 100 [(V_cf / V_base)^(1/(1-psi)) - 1]`, the percentage by which
//! baseline per-capita consumption would have to rise in every period to
//! match the counterfactual.

use ndarray::{Array1, Array2};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::fundamentals::Fundamentals;
use crate::steady_state::SteadyState;
use crate::transition::TransitionPath;

/// Per-period utility weights and per-capita consumption of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareSeries {
    /// `zeta_t L_t`, `[n, H]`.
    pub weight: Array2<f64>,
    /// `C_t / L_t`, `[n, H]`.
    pub c: Array2<f64>,
    pub tail_weight: Array1<f64>,
    pub tail_c: Array1<f64>,
}

impl WelfareSeries {
    /// Read the series off a solved path. Periods past the observed years
    /// use the terminal fundamentals; the tail is the boundary steady state.
    pub fn from_path(path: &TransitionPath, fund: &Fundamentals, boundary: &SteadyState) -> Self {
        let n = fund.n_countries();
        let h = path.horizon();
        let last = fund.n_periods() - 1;
        let mut weight = Array2::zeros((n, h));
        let mut c = Array2::zeros((n, h));
        for t in 0..h {
            let q = t.min(last);
            for a in 0..n {
                let l = fund.l[[a, q]];
                weight[[a, t]] = fund.zeta[[a, q]] * l;
                c[[a, t]] = path.eqs[t].c[a] / l;
            }
        }
        let bf = &boundary.fund;
        let tail_weight = Array1::from_shape_fn(n, |a| bf.zeta[a] * bf.l[a]);
        let tail_c = Array1::from_shape_fn(n, |a| boundary.eq.c[a] / bf.l[a]);
        Self { weight, c, tail_weight, tail_c }
    }

    fn check_against(&self, other: &Self, t0: usize) -> Result<()> {
        if self.weight.dim() != other.weight.dim() || self.c.dim() != self.weight.dim() || other.c.dim() != other.weight.dim() {
            return Err(Error::validation(format!(
                "welfare paths have mismatched shapes {:?} and {:?}",
                self.c.dim(),
                other.c.dim()
            )));
        }
        if self.tail_c.len() != self.c.nrows() || other.tail_c.len() != other.c.nrows() {
            return Err(Error::validation("steady-state tail does not match the country count"));
        }
        if t0 >= self.c.ncols() {
            return Err(Error::validation(format!("start period {t0} is outside the horizon of {} periods", self.c.ncols())));
        }
        Ok(())
    }
}

/// `V_n` from the module docs.
fn discounted_power_sum(s: &WelfareSeries, cfg: &ModelConfig, t0: usize) -> Array1<f64> {
    let (n, h) = s.c.dim();
    let e = 1.0 - cfg.psi;
    Array1::from_shape_fn(n, |a| {
        let mut v = 0.0;
        let mut disc = 1.0;
        for t in t0..h {
            v += disc * s.weight[[a, t]] * s.c[[a, t]].powf(e);
            disc *= cfg.beta;
        }
        v + disc / (1.0 - cfg.beta) * s.tail_weight[a] * s.tail_c[a].powf(e)
    })
}

/// Discounted lifetime utility from `t0`, `V_n / (1 - psi)`.
pub fn discounted_utility(s: &WelfareSeries, cfg: &ModelConfig, t0: usize) -> Result<Array1<f64>> {
    s.check_against(s, t0)?;
    Ok(discounted_power_sum(s, cfg, t0) / (1.0 - cfg.psi))
}

/// Consumption-equivalent welfare change in percent, per country.
pub fn welfare_equivalent(base: &WelfareSeries, cf: &WelfareSeries, cfg: &ModelConfig, t0: usize) -> Result<Array1<f64>> {
    base.check_against(cf, t0)?;
    if !(cfg.psi > 1.0) {
        return Err(Error::validation(format!("welfare needs psi > 1, got {}", cfg.psi)));
    }
    let vb = discounted_power_sum(base, cfg, t0);
    let vc = discounted_power_sum(cf, cfg, t0);
    let inv = 1.0 / (1.0 - cfg.psi);
    Ok(Array1::from_shape_fn(vb.len(), |a| 100.0 * ((vc[a] / vb[a]).powf(inv) - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(seed: u64, n: usize, h: usize) -> WelfareSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        WelfareSeries {
            weight: Array2::from_shape_fn((n, h), |_| rng.gen_range(0.5..2.0)),
            c: Array2::from_shape_fn((n, h), |_| rng.gen_range(0.5..3.0)),
            tail_weight: Array1::from_shape_fn(n, |_| rng.gen_range(0.5..2.0)),
            tail_c: Array1::from_shape_fn(n, |_| rng.gen_range(0.5..3.0)),
        }
    }

    fn cfg() -> ModelConfig {
        ModelConfig::default().validated().unwrap()
    }

    #[test]
    fn identical_paths_give_zero() {
        let s = series(1, 3, 40);
        for t0 in [0, 5, 39] {
            let l = welfare_equivalent(&s, &s, &cfg(), t0).unwrap();
            assert!(l.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn constant_scaling_is_recovered() {
        let b = series(2, 3, 60);
        for (x, psi) in [(0.02, 2.0), (-0.013, 1.5), (0.3, 4.0)] {
            let mut c = cfg();
            c.psi = psi;
            let mut cf = b.clone();
            cf.c.mapv_inplace(|v| v * (1.0 + x));
            cf.tail_c.mapv_inplace(|v| v * (1.0 + x));
            for l in welfare_equivalent(&b, &cf, &c, 3).unwrap() {
                assert!((l - 100.0 * x).abs() < 1e-10, "{l} vs {}", 100.0 * x);
            }
        }
    }

    #[test]
    fn tail_only_difference_matches_brute_force() {
        let c = cfg();
        let b = series(3, 2, 30);
        let mut cf = b.clone();
        cf.tail_c[0] *= 1.1;
        cf.tail_c[1] *= 0.95;
        let t0 = 4;
        let l = welfare_equivalent(&b, &cf, &c, t0).unwrap();
        // Independent oracle: sum the steady-state periods explicitly until
        // the discount factor underflows the sum.
        let total = |s: &WelfareSeries, a: usize| {
            let mut v = 0.0;
            for t in t0..30 {
                v += c.beta.powi((t - t0) as i32) * s.weight[[a, t]] * s.c[[a, t]].powf(1.0 - c.psi);
            }
            let u = s.tail_weight[a] * s.tail_c[a].powf(1.0 - c.psi);
            for t in 30..3000 {
                v += c.beta.powi((t - t0) as i32) * u;
            }
            v
        };
        for a in 0..2 {
            let want = 100.0 * ((total(&cf, a) / total(&b, a)).powf(1.0 / (1.0 - c.psi)) - 1.0);
            assert!((l[a] - want).abs() < 1e-10, "{} vs {want}", l[a]);
        }
        assert!(l[0] > 0.0 && l[1] < 0.0);
    }

    #[test]
    fn sign_matches_utility_ranking() {
        let c = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for k in 0..50 {
            let b = series(100 + k, 2, 20);
            let mut cf = b.clone();
            cf.c.mapv_inplace(|v| v * rng.gen_range(0.97..1.03));
            let l = welfare_equivalent(&b, &cf, &c, 0).unwrap();
            let ub = discounted_utility(&b, &c, 0).unwrap();
            let uc = discounted_utility(&cf, &c, 0).unwrap();
            for a in 0..2 {
                assert_eq!(l[a] > 0.0, uc[a] > ub[a]);
            }
        }
    }

    #[test]
    fn mismatched_horizons_are_rejected() {
        let a = series(4, 2, 10);
        let b = series(4, 2, 11);
        assert_eq!(welfare_equivalent(&a, &b, &cfg(), 0).unwrap_err().exit_code(), 2);
        assert!(welfare_equivalent(&a, &a, &cfg(), 10).is_err());
    }
}
