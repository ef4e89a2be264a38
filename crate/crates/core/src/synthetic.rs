//! Seeded synthetic worlds used by tests, the acceptance suite and the
//! command-line demos.

use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calibration::{GravityCovariates, ObservedPanel};
use crate::config::{ModelConfig, PreferenceFamily};
use crate::error::Result;
use crate::fundamentals::Fundamentals;
use crate::static_eq::PeriodInputs;
use crate::steady_state::solve_steady_state;
use crate::transition::TransitionPath;
use crate::twocountry::TwoCountryInstance;

fn names(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

/// Sector labels used by the three-sector worlds.
pub fn three_sectors() -> Vec<String> {
    vec!["agriculture".into(), "manufacturing".into(), "services".into()]
}

fn normalized<R: Rng>(rng: &mut R, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..k).map(|_| rng.gen_range(lo..hi)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Fill the non-gravity fundamentals with seeded draws.
fn draw_common<R: Rng>(f: &mut Fundamentals, rng: &mut R) {
    let (n, j, t) = (f.n_countries(), f.n_sectors(), f.n_periods());
    for c in 0..n {
        let level: Vec<f64> = (0..j).map(|_| rng.gen_range(0.8..1.25)).collect();
        let growth: Vec<f64> = (0..j).map(|_| rng.gen_range(-0.01..0.03)).collect();
        let l0 = rng.gen_range(0.6..1.8);
        let lg: f64 = rng.gen_range(-0.005..0.01);
        let om = normalized(rng, j, 0.5, 1.5);
        let phi = rng.gen_range(-0.02..0.02);
        let delta = rng.gen_range(0.05..0.08);
        let zeta_slope = rng.gen_range(-0.01..0.01);
        for q in 0..t {
            for k in 0..j {
                f.a[[c, k, q]] = level[k] * (1.0 + growth[k]).powi(q as i32);
                f.omega_shift[[c, k, q]] = om[k];
                f.gamma[[c, k, q]] = 0.45 + 0.05 * ((c + k) % 3) as f64;
                f.alpha[[c, k, q]] = 0.3 + 0.03 * ((c + 2 * k) % 3) as f64;
            }
            for u in 0..j {
                let row = normalized(rng, j, 0.3, 1.0);
                for h in 0..j {
                    f.kappa_io[[c, u, h, q]] = row[h];
                }
            }
            let kk = normalized(rng, j, 0.3, 1.0);
            for h in 0..j {
                f.kappa_k[[c, h, q]] = kk[h];
            }
            f.l[[c, q]] = l0 * (1.0 + lg).powi(q as i32);
            f.phi[[c, q]] = phi;
            f.delta[[c, q]] = delta;
            f.zeta[[c, q]] = 1.0 + zeta_slope * (t - 1 - q) as f64;
        }
    }
    // Portfolio contributions net out across countries.
    let mean: f64 = f.phi.column(0).sum() / n as f64;
    f.phi.mapv_inplace(|v| v - mean);
}

/// A world together with the gravity structure behind its trade costs.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub fund: Fundamentals,
    pub covariates: GravityCovariates,
    pub reference: usize,
    /// Planted effect of each covariate on `ln d`, `[sector][covariate]`,
    /// in the order distance dummy, border.
    pub planted_log_d: Vec<[f64; 2]>,
    /// Planted exporter component of `ln d`, `[exporter, sector]`.
    pub planted_exporter: Array2<f64>,
}

/// Four countries, three sectors, `periods` years starting in 2000. Trade
/// costs follow `ln d = base + b_dist * dist + b_border * border + ex_i`
/// exactly, so a gravity regression recovers the planted coefficients.
pub fn calibration_world(seed: u64, periods: usize) -> Result<SyntheticWorld> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 4;
    let j = 3;
    let years: Vec<i32> = (0..periods as i32).map(|k| 2000 + k).collect();
    let mut f = Fundamentals::uniform(names("c", n), three_sectors(), years);
    draw_common(&mut f, &mut rng);
    let mut cov = GravityCovariates::empty(n, periods);
    // Distances: pairs {0,1} and {2,3} are far, everything else close.
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let far = (a.min(b), a.max(b)) == (0, 1) || (a.min(b), a.max(b)) == (2, 3);
                cov.distance[[a, b]] = if far { 2000.0 } else { 500.0 };
                let border = (a.min(b), a.max(b)) == (0, 2);
                for q in 0..periods {
                    cov.border[[a, b, q]] = if border { 1.0 } else { 0.0 };
                }
            }
        }
    }
    let mut planted = Vec::with_capacity(j);
    let mut ex = Array2::zeros((n, j));
    for k in 0..j {
        let b_dist = rng.gen_range(0.2..0.5);
        let b_border = -rng.gen_range(0.05..0.15);
        planted.push([b_dist, b_border]);
        for i in 0..n {
            ex[[i, k]] = rng.gen_range(0.0..0.3);
        }
        let base = rng.gen_range(0.4..0.8);
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let far = if cov.distance[[a, b]] > 1500.0 { 1.0 } else { 0.0 };
                for q in 0..periods {
                    let ln_d = base + b_dist * far + b_border * cov.border[[a, b, q]] + ex[[b, k]];
                    f.d[[a, b, k, q]] = ln_d.exp();
                    f.tau[[a, b, k, q]] = rng.gen_range(0.0..0.08);
                }
            }
        }
    }
    let cfg = ModelConfig::default().validated()?;
    let ss = solve_steady_state(&f.period(0), &cfg)?;
    f.k0 = ss.eq.k.mapv(|v| 0.9 * v);
    f.validate()?;
    Ok(SyntheticWorld { fund: f, covariates: cov, reference: 0, planted_log_d: planted, planted_exporter: ex })
}

/// Three countries, three sectors, `periods` years, moderately asymmetric,
/// starting below the steady state.
pub fn audit_world(seed: u64, periods: usize) -> Result<Fundamentals> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 3;
    let years: Vec<i32> = (0..periods as i32).map(|k| 2000 + k).collect();
    let mut f = Fundamentals::uniform(names("c", n), three_sectors(), years);
    draw_common(&mut f, &mut rng);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                for k in 0..3 {
                    let d = rng.gen_range(1.4..2.2);
                    for q in 0..periods {
                        f.d[[a, b, k, q]] = d;
                        f.tau[[a, b, k, q]] = rng.gen_range(0.0..0.1);
                    }
                }
            }
        }
    }
    let cfg = ModelConfig::default().validated()?;
    let ss = solve_steady_state(&f.period(0), &cfg)?;
    f.k0 = ss.eq.k.mapv(|v| 0.9 * v);
    f.validate()?;
    Ok(f)
}

/// Two countries with identical technology and trade costs. Home's demand
/// shifters tilt spending towards services, so its average income
/// elasticity exceeds one. Fundamentals are constant over `periods` years
/// and capital starts at the steady state.
pub fn developed_twin(periods: usize) -> Result<Fundamentals> {
    let years: Vec<i32> = (0..periods as i32).map(|k| 2000 + k).collect();
    let mut f = Fundamentals::uniform(vec!["home".into(), "foreign".into()], three_sectors(), years);
    for a in 0..2 {
        for b in 0..2 {
            for k in 0..3 {
                for q in 0..periods {
                    if a != b {
                        f.d[[a, b, k, q]] = [1.6, 1.4, 2.4][k];
                    }
                    f.a[[a, k, q]] = [1.0, 1.0, 1.0][k];
                    f.omega_shift[[a, k, q]] = [[0.05, 0.35, 0.6], [0.2, 0.45, 0.35]][a][k];
                    f.gamma[[a, k, q]] = [0.5, 0.35, 0.6][k];
                }
            }
        }
    }
    let cfg = ModelConfig::default().validated()?;
    let ss = solve_steady_state(&f.period(0), &cfg)?;
    f.k0 = ss.eq.k.clone();
    f.validate()?;
    Ok(f)
}

/// Observables of a solved path, restricted to the sample years.
pub fn observe(
    fund: &Fundamentals,
    path: &TransitionPath,
    covariates: &GravityCovariates,
    reference: usize,
) -> ObservedPanel {
    let (n, j, t) = (fund.n_countries(), fund.n_sectors(), fund.n_periods());
    let mut p = ObservedPanel {
        countries: fund.countries.clone(),
        sectors: fund.sectors.clone(),
        years: fund.periods.clone(),
        reference,
        pi: ndarray::Array4::zeros((n, n, j, t)),
        tau: fund.tau.clone(),
        g_io: ndarray::Array4::zeros((n, j, j, t)),
        g_k: Array3::zeros((n, j, t)),
        p_ref: Array2::zeros((j, t)),
        value_added: Array3::zeros((n, j, t)),
        gross_output: Array3::zeros((n, j, t)),
        labor_share: Array3::zeros((n, j, t)),
        employment: fund.l.clone(),
        gfcf: Array2::zeros((n, t)),
        consumption: Array2::zeros((n, t)),
        consumption_shares: Array3::zeros((n, j, t)),
        population: fund.l.clone(),
        capital0_value: Array1::zeros(n),
        delta: fund.delta.clone(),
        phi: fund.phi.clone(),
        covariates: covariates.clone(),
    };
    for q in 0..t {
        let eq = &path.eqs[q];
        for c in 0..n {
            for k in 0..j {
                for i in 0..n {
                    p.pi[[c, i, k, q]] = eq.pi[[c, i, k]];
                }
                for h in 0..j {
                    p.g_io[[c, k, h, q]] = eq.g_io[[c, k, h]];
                }
                p.g_k[[c, k, q]] = eq.g_k[[c, k]];
                p.gross_output[[c, k, q]] = eq.y[[c, k]];
                p.value_added[[c, k, q]] = fund.gamma[[c, k, q]] * eq.y[[c, k]];
                p.labor_share[[c, k, q]] = 1.0 - fund.alpha[[c, k, q]];
                p.consumption_shares[[c, k, q]] = eq.omega[[c, k]];
            }
            p.gfcf[[c, q]] = eq.inv_value[c];
            p.consumption[[c, q]] = eq.e[c];
        }
        for k in 0..j {
            p.p_ref[[k, q]] = eq.p[[reference, k]];
        }
    }
    for c in 0..n {
        p.capital0_value[c] = path.eqs[0].pk[c] * path.k[[c, 0]];
    }
    p
}

/// The full single-period model configured to mimic a two-country
/// instance: no intermediate inputs, a capital share of `alpha`, no saving
/// and no portfolio transfers. Capital is set so that the rental rate equals
/// the wage in both countries, which makes relative unit costs equal
/// relative wages exactly.
pub fn twocountry_as_world(inst: &TwoCountryInstance, alpha: f64) -> Result<(PeriodInputs, ModelConfig)> {
    inst.validate()?;
    let j = inst.sectors();
    let sectors: Vec<String> = names("s", j);
    let mut f = Fundamentals::uniform(vec!["home".into(), "foreign".into()], sectors, vec![0]);
    let a = [inst.a_h, inst.a_f];
    let l = [inst.l_h, inst.l_f];
    for c in 0..2 {
        for k in 0..j {
            f.a[[c, k, 0]] = a[c];
            f.gamma[[c, k, 0]] = 1.0;
            f.alpha[[c, k, 0]] = alpha;
            f.omega_shift[[c, k, 0]] = 1.0;
        }
        f.l[[c, 0]] = l[c];
        f.phi[[c, 0]] = 0.0;
    }
    for k in 0..j {
        f.d[[0, 1, k, 0]] = inst.d_hf;
        f.d[[1, 0, k, 0]] = inst.d_fh;
        f.tau[[0, 1, k, 0]] = inst.tau_hf[k];
        f.tau[[1, 0, k, 0]] = inst.tau_fh[k];
    }
    f.validate()?;
    let mut cfg = ModelConfig {
        sigma: inst.sigma,
        epsilon: inst.epsilon.clone(),
        theta: vec![inst.theta; j],
        sigma_io: vec![0.5; j],
        preference_family: inst.family,
        ..ModelConfig::default()
    };
    cfg.validate()?;
    let k = Array1::from_shape_fn(2, |c| alpha / (1.0 - alpha) * l[c]);
    Ok((PeriodInputs { t: 0, k, rho: Array1::zeros(2), fund: f.period(0) }, cfg))
}

/// Random two-country instances with income elasticities `(0.05, 1, 1.2)`
/// under the requested family.
pub fn twocountry_instances(seed: u64, count: usize, family: PreferenceFamily) -> Vec<TwoCountryInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let theta = rng.gen_range(3.0..8.0);
            let sigma = rng.gen_range(0.3..0.8);
            let mut inst = TwoCountryInstance::symmetric(vec![0.05, 1.0, 1.2], theta, sigma, PreferenceFamily::NonhomotheticCes);
            inst.a_h = rng.gen_range(0.7..1.5);
            inst.a_f = rng.gen_range(0.7..1.5);
            inst.l_h = rng.gen_range(0.5..2.0);
            inst.l_f = rng.gen_range(0.5..2.0);
            inst.d_hf = rng.gen_range(1.2..2.5);
            inst.d_fh = rng.gen_range(1.2..2.5);
            inst.with_family(family, &[0.05, 1.0, 1.2])
        })
        .collect()
}
