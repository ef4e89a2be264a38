//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use structrade::calibration::{calibrate, PpmlSettings};
use structrade::config::PreferenceFamily;
use structrade::model::{newton_consumption, NewtonSettings, PeriodEquilibrium, Preferences};
use structrade::num::bisect;
use structrade::scenario::{run_scenario, welfare_equivalent, write_run, Scenario, ScenarioRun, Selection, TariffOverride, YearRange};
use structrade::static_eq::solve_period;
use structrade::synthetic::{audit_world, calibration_world, developed_twin, observe, twocountry_as_world, twocountry_instances};
use structrade::transition::audit::audit_path;
use structrade::transition::{solve_transition, PathProblem};
use structrade::twocountry::{
    self, default_grid, optimal_tariff, semi_elasticity_ratio, share_decomposition, sweep, value_added_decomposition,
    TwoCountryInstance, VaEffect, FOREIGN, HOME,
};
use structrade::{Fundamentals, ModelConfig};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() <= limit_s as f64, || format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()))
}

fn default_cfg() -> ModelConfig {
    ModelConfig::default().validated().unwrap()
}

// 1 --------------------------------------------------------------------------

fn residual_audit() -> Outcome {
    let start = Instant::now();
    let f = audit_world(2024, 10).map_err(|e| e.to_string())?;
    let problem = PathProblem::new(f, &default_cfg()).map_err(|e| e.to_string())?;
    let path = solve_transition(&problem, None).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let conds = audit_path(&path, &problem).map_err(|e| e.to_string())?;
    let worst = conds.iter().fold(("", 0.0f64), |m, c| if c.residual > m.1 { (c.name, c.residual) } else { m });
    ensure(worst.1 <= 1e-6, || format!("condition '{}' has residual {:e}", worst.0, worst.1))?;
    ensure(path.max_abs_z() <= 1e-6, || format!("Euler residual {:e}", path.max_abs_z()))?;
    within(elapsed, 60)?;
    Ok(format!(
        "{} conditions, worst {:.1e} ({}), Euler {:.1e}, {:.1}s",
        conds.len(),
        worst.1,
        worst.0,
        path.max_abs_z(),
        elapsed.as_secs_f64()
    ))
}

// 2 --------------------------------------------------------------------------

/// Hold every fundamental at its first-period value.
fn frozen(mut f: Fundamentals) -> Fundamentals {
    let t = f.n_periods();
    for q in 1..t {
        let (a, d, tau, kio, kk, om) = (
            f.a.index_axis(ndarray::Axis(2), 0).to_owned(),
            f.d.index_axis(ndarray::Axis(3), 0).to_owned(),
            f.tau.index_axis(ndarray::Axis(3), 0).to_owned(),
            f.kappa_io.index_axis(ndarray::Axis(3), 0).to_owned(),
            f.kappa_k.index_axis(ndarray::Axis(2), 0).to_owned(),
            f.omega_shift.index_axis(ndarray::Axis(2), 0).to_owned(),
        );
        f.a.index_axis_mut(ndarray::Axis(2), q).assign(&a);
        f.d.index_axis_mut(ndarray::Axis(3), q).assign(&d);
        f.tau.index_axis_mut(ndarray::Axis(3), q).assign(&tau);
        f.kappa_io.index_axis_mut(ndarray::Axis(3), q).assign(&kio);
        f.kappa_k.index_axis_mut(ndarray::Axis(2), q).assign(&kk);
        f.omega_shift.index_axis_mut(ndarray::Axis(2), q).assign(&om);
        let (g, al) = (f.gamma.index_axis(ndarray::Axis(2), 0).to_owned(), f.alpha.index_axis(ndarray::Axis(2), 0).to_owned());
        f.gamma.index_axis_mut(ndarray::Axis(2), q).assign(&g);
        f.alpha.index_axis_mut(ndarray::Axis(2), q).assign(&al);
        for arr in [&mut f.zeta, &mut f.l, &mut f.delta, &mut f.phi] {
            let first = arr.column(0).to_owned();
            arr.column_mut(q).assign(&first);
        }
    }
    f
}

fn eq_gap(a: &PeriodEquilibrium, b: &PeriodEquilibrium) -> f64 {
    let gap = |x: &[f64], y: &[f64]| x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs() / q.abs().max(1.0)));
    let v = |x: &Array1<f64>| x.to_vec();
    let m = |x: &Array2<f64>| x.iter().copied().collect::<Vec<_>>();
    let c = |x: &Array3<f64>| x.iter().copied().collect::<Vec<_>>();
    [
        gap(&v(&a.w), &v(&b.w)),
        gap(&v(&a.r), &v(&b.r)),
        gap(&v(&a.k), &v(&b.k)),
        gap(&v(&a.rho), &v(&b.rho)),
        gap(&m(&a.c_tilde), &m(&b.c_tilde)),
        gap(&m(&a.xi), &m(&b.xi)),
        gap(&m(&a.p), &m(&b.p)),
        gap(&v(&a.pk), &v(&b.pk)),
        gap(&c(&a.pi), &c(&b.pi)),
        gap(&c(&a.g_io), &c(&b.g_io)),
        gap(&m(&a.g_k), &m(&b.g_k)),
        gap(&m(&a.x), &m(&b.x)),
        gap(&m(&a.y), &m(&b.y)),
        gap(&v(&a.t_tariff), &v(&b.t_tariff)),
        gap(&[a.tp], &[b.tp]),
        gap(&v(&a.ni), &v(&b.ni)),
        gap(&v(&a.e), &v(&b.e)),
        gap(&v(&a.inv_value), &v(&b.inv_value)),
        gap(&v(&a.c), &v(&b.c)),
        gap(&m(&a.omega), &m(&b.omega)),
        gap(&v(&a.eps_bar), &v(&b.eps_bar)),
        gap(&m(&a.va_share), &m(&b.va_share)),
        gap(&v(&a.deficit), &v(&b.deficit)),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn stationarity() -> Outcome {
    let mut worst = 0.0f64;
    let mut cfg = default_cfg();
    cfg.extension = 100;
    let worlds = [
        frozen(audit_world(31, 10).map_err(|e| e.to_string())?),
        developed_twin(10).map_err(|e| e.to_string())?,
    ];
    for mut f in worlds {
        let ss = structrade::steady_state::solve_steady_state(&f.period(0), &cfg).map_err(|e| e.to_string())?;
        f.k0 = ss.eq.k.clone();
        let problem = PathProblem::new(f, &cfg).map_err(|e| e.to_string())?;
        let path = solve_transition(&problem, None).map_err(|e| e.to_string())?;
        for eq in &path.eqs {
            worst = worst.max(eq_gap(eq, &problem.boundary.eq));
        }
        for (k, kss) in path.k.outer_iter().zip(problem.boundary.eq.k.iter()) {
            worst = worst.max(k.iter().fold(0.0f64, |m, v| m.max((v / kss - 1.0).abs())));
        }
    }
    ensure(worst <= 1e-7, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation from the steady state {worst:.1e} over two worlds"))
}

// 3 --------------------------------------------------------------------------

fn newton_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_h, mut worst_nh) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let j = rng.gen_range(2..6);
        let e: f64 = rng.gen_range(0.2..20.0);
        let l: f64 = rng.gen_range(0.3..3.0);
        let sigma: f64 = rng.gen_range(0.1..0.95);
        let p: Vec<f64> = (0..j).map(|_| rng.gen_range(0.2..5.0)).collect();
        let om: Vec<f64> = (0..j).map(|_| rng.gen_range(0.05..1.0)).collect();
        let ones = vec![1.0; j];
        let h = Preferences::new(&ones, sigma, PreferenceFamily::HomotheticCes);
        let c = newton_consumption(e, l, &p, &om, &h, NewtonSettings::default()).map_err(|er| er.to_string())?;
        let pbar = om.iter().zip(&p).map(|(w, x)| w * x.powf(1.0 - sigma)).sum::<f64>().powf(1.0 / (1.0 - sigma));
        worst_h = worst_h.max((c / (e / pbar) - 1.0).abs());

        let mut eps: Vec<f64> = (0..j).map(|_| rng.gen_range(0.05..2.0)).collect();
        eps[rng.gen_range(0..j)] = 1.0;
        let nh = Preferences::new(&eps, sigma, PreferenceFamily::NonhomotheticCes);
        let c = newton_consumption(e, l, &p, &om, &nh, NewtonSettings::default()).map_err(|er| er.to_string())?;
        // The defining equation, solved in ln(C/L) by plain bisection.
        let g = |lc: f64| {
            let s: f64 = (0..j).map(|k| om[k] * ((eps[k] * lc).exp() * p[k]).powf(1.0 - sigma)).sum();
            s.ln() - (1.0 - sigma) * (e / l).ln()
        };
        let root = bisect(|x| -g(x), -60.0, 60.0, 1e-15, 2000).ok_or("bisection oracle failed to bracket")?;
        worst_nh = worst_nh.max((c / (l * root.exp()) - 1.0).abs());
    }
    ensure(worst_h <= 1e-10, || format!("homothetic gap {worst_h:e}"))?;
    ensure(worst_nh <= 1e-8, || format!("nonhomothetic gap {worst_nh:e}"))?;
    Ok(format!("1000 draws: homothetic {worst_h:.1e}, nonhomothetic {worst_nh:.1e}"))
}

// 4 --------------------------------------------------------------------------

const ZERO: f64 = 1e-7;

fn sign(x: f64) -> i8 {
    if x.abs() < ZERO {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

/// Expected signs of (d ln omega, expenditure, net exports, tariff revenue,
/// d ln va); `None` marks an entry that is ambiguous in general.
type Row = [Option<i8>; 5];

fn check_row(e: &VaEffect, want: Row, what: &str) -> Result<(), String> {
    let got = [e.d_ln_omega, e.expenditure, e.net_exports, e.tariff_revenue, e.d_ln_va];
    let labels = ["d ln omega", "expenditure", "net exports", "tariff revenue", "d ln va"];
    for k in 0..5 {
        if let Some(s) = want[k] {
            ensure(sign(got[k]) == s, || format!("{what}: {} is {:e}, expected sign {s}", labels[k], got[k]))?;
        }
    }
    Ok(())
}

fn inverted_u(inst: &TwoCountryInstance, grid: &[f64]) -> Result<(), String> {
    let rows = sweep(inst, &[], grid).map_err(|e| e.to_string())?;
    let u: Vec<f64> = rows.iter().map(|r| r.u_h).collect();
    let top = (0..u.len()).max_by(|&a, &b| u[a].total_cmp(&u[b])).unwrap();
    ensure(top > 0 && top + 1 < u.len(), || format!("welfare peak at the grid edge ({})", grid[top]))?;
    ensure(u[..=top].windows(2).all(|w| w[1] > w[0]) && u[top..].windows(2).all(|w| w[1] < w[0]), || {
        "home welfare is not single peaked on the grid".to_string()
    })?;
    let o = optimal_tariff(inst).map_err(|e| e.to_string())?;
    ensure((o.fixed_point - grid[top]).abs() <= 1e-3, || format!("fixed point {} vs grid argmax {}", o.fixed_point, grid[top]))?;
    ensure((o.fixed_point - o.refined_argmax).abs() <= 1e-3, || {
        format!("fixed point {} vs refined argmax {}", o.fixed_point, o.refined_argmax)
    })
}

fn symmetric_nh_instances(seed: u64, count: usize) -> Vec<TwoCountryInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let eps = vec![rng.gen_range(0.05..0.7), 1.0, rng.gen_range(1.05..1.8)];
            let mut i = TwoCountryInstance::symmetric(eps, rng.gen_range(3.0..8.0), rng.gen_range(0.3..0.8), PreferenceFamily::NonhomotheticCes);
            let d = rng.gen_range(1.2..2.5);
            i.d_hf = d;
            i.d_fh = d;
            i
        })
        .collect()
}

fn twocountry_suite() -> Outcome {
    let start = Instant::now();
    let count = 24;
    let nh = twocountry_instances(41, count, PreferenceFamily::NonhomotheticCes);
    let h = twocountry_instances(42, count, PreferenceFamily::HomotheticCes);
    let cd = twocountry_instances(43, count, PreferenceFamily::CobbDouglas);
    let sym = symmetric_nh_instances(44, count);
    let grid = default_grid();
    let manuf = [0.0, 1.0, 0.0];
    let uniform = [1.0, 1.0, 1.0];
    let mut semi = 0.0f64;

    for (k, inst) in nh.iter().chain(&h).chain(&cd).chain(&sym).enumerate() {
        inverted_u(inst, &grid).map_err(|e| format!("(a) instance {k}: {e}"))?;
    }
    for (k, inst) in nh.iter().enumerate() {
        let d = share_decomposition(inst, &uniform).map_err(|e| e.to_string())?;
        let eb = twocountry::solve(inst).map_err(|e| e.to_string())?.eps_bar[HOME];
        let s: Vec<i8> = d.home.iter().map(|e| sign(e.d_ln_omega)).collect();
        ensure(s[0] == -1 && s[2] == 1 && s[1] == sign(1.0 - eb), || format!("(b) nh instance {k}: signs {s:?}, eps_bar {eb}"))?;
        let r = semi_elasticity_ratio(inst).map_err(|e| e.to_string())?;
        semi = semi.max((r.finite_difference - r.closed_form).abs());
    }
    ensure(semi <= 1e-6, || format!("(d) semi-elasticity gap {semi:e}"))?;
    for (k, inst) in h.iter().enumerate() {
        let d = share_decomposition(inst, &manuf).map_err(|e| e.to_string())?;
        let s: Vec<i8> = d.home.iter().map(|e| sign(e.d_ln_omega)).collect();
        ensure(s == [-1, 1, -1], || format!("(b) h instance {k}: signs {s:?}"))?;
    }
    for (k, inst) in cd.iter().enumerate() {
        for dt in [manuf, uniform] {
            let d = share_decomposition(inst, &dt).map_err(|e| e.to_string())?;
            ensure(d.home.iter().all(|e| sign(e.d_ln_omega) == 0), || format!("(b) cd instance {k}: shares move"))?;
        }
    }

    // Value-added channels: uniform tariff on symmetric nonhomothetic
    // countries, split by the cutoff sector.
    for (k, inst) in sym.iter().enumerate() {
        let cut = share_decomposition(inst, &uniform).map_err(|e| e.to_string())?.cutoff;
        let cut = cut.ok_or_else(|| format!("(c) symmetric instance {k}: no cutoff sector"))?;
        let [home, foreign] = value_added_decomposition(inst, &uniform).map_err(|e| e.to_string())?;
        for s in 0..3 {
            let low = s <= cut;
            let (hw, fw): (Row, Row) = if low {
                ([Some(-1), None, Some(1), Some(-1), Some(-1)], [Some(1), Some(1), Some(-1), Some(0), Some(1)])
            } else {
                ([Some(1), Some(1), Some(-1), Some(-1), Some(1)], [Some(-1), Some(-1), Some(1), Some(0), Some(-1)])
            };
            check_row(&home[s], hw, &format!("(c) nh home sector {s}, instance {k}"))?;
            check_row(&foreign[s], fw, &format!("(c) nh foreign sector {s}, instance {k}"))?;
        }
    }
    // Manufacturing-only tariff on asymmetric countries.
    for (fam, set) in [("h", &h), ("cd", &cd)] {
        for (k, inst) in set.iter().enumerate() {
            let [home, foreign] = value_added_decomposition(inst, &manuf).map_err(|e| e.to_string())?;
            let om = if fam == "h" { 1 } else { 0 };
            for s in 0..3 {
                let hit = s == 1;
                let hw: Row = if hit {
                    [Some(om), Some(1), Some(1), Some(-1), Some(1)]
                } else {
                    [Some(-om), Some(1), Some(-1), Some(0), Some(-1)]
                };
                let fw: Row = if hit { [Some(0), Some(0), Some(-1), Some(0), Some(-1)] } else { [Some(0), Some(0), Some(1), Some(0), Some(1)] };
                check_row(&home[s], hw, &format!("(c) {fam} home sector {s}, instance {k}"))?;
                check_row(&foreign[s], fw, &format!("(c) {fam} foreign sector {s}, instance {k}"))?;
            }
        }
    }
    let _ = FOREIGN;
    let elapsed = start.elapsed();
    within(elapsed, 120)?;
    Ok(format!("{} instances, semi-elasticity gap {semi:.1e}, {:.1}s", 4 * count, elapsed.as_secs_f64()))
}

// 5 --------------------------------------------------------------------------

fn cross_module() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (seed, family) in [(51, PreferenceFamily::NonhomotheticCes), (52, PreferenceFamily::HomotheticCes), (53, PreferenceFamily::CobbDouglas)] {
        for (k, mut inst) in twocountry_instances(seed, 8, family).into_iter().enumerate() {
            if k % 2 == 1 {
                inst = inst.with_uniform_tariff(0.04 * k as f64);
            }
            let closed = twocountry::solve(&inst).map_err(|e| e.to_string())?;
            let (inputs, cfg) = twocountry_as_world(&inst, 1e-6).map_err(|e| e.to_string())?;
            let full = solve_period(&inputs, &cfg, None).map_err(|e| e.to_string())?;
            worst = worst.max((full.w[0] / full.w[1] / closed.w - 1.0).abs());
            for n in 0..2 {
                for s in 0..inst.sectors() {
                    worst = worst.max((full.omega[[n, s]] - closed.omega[n][s]).abs());
                    worst = worst.max((full.va_share[[n, s]] - closed.va[n][s]).abs());
                }
            }
            cases += 1;
        }
    }
    ensure(worst <= 1e-5, || format!("largest gap {worst:e}"))?;
    Ok(format!("{cases} instances, largest gap in w, omega, va {worst:.1e}"))
}

// 6 --------------------------------------------------------------------------

fn calibration_round_trip() -> Outcome {
    let start = Instant::now();
    let mut cfg = ModelConfig::default();
    cfg.tol.euler = 1e-10;
    cfg.extension = 200;
    let cfg = cfg.validated().map_err(|e| e.to_string())?;
    let world = calibration_world(11, 5).map_err(|e| e.to_string())?;
    let problem = PathProblem::new(world.fund.clone(), &cfg).map_err(|e| e.to_string())?;
    let path = solve_transition(&problem, None).map_err(|e| e.to_string())?;
    let panel = observe(&world.fund, &path, &world.covariates, world.reference);
    let cal = calibrate(&panel, &cfg, &PpmlSettings::default()).map_err(|e| e.to_string())?;
    let again = solve_transition(&PathProblem::new(cal.fund, &cfg).map_err(|e| e.to_string())?, None).map_err(|e| e.to_string())?;
    let rel = |a: f64, b: f64| (a / b - 1.0).abs();
    let mut worst = 0.0f64;
    for t in 0..world.fund.n_periods() {
        let (a, b) = (&path.eqs[t], &again.eqs[t]);
        for (x, y) in a.omega.iter().zip(&b.omega).chain(a.va_share.iter().zip(&b.va_share)).chain(a.w.iter().zip(&b.w)) {
            worst = worst.max(rel(*y, *x));
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-6, || format!("path deviation {worst:e}"))?;
    within(elapsed, 300)?;
    Ok(format!("4 countries, path deviation {worst:.1e}, {:.1}s", elapsed.as_secs_f64()))
}

// 7 --------------------------------------------------------------------------

fn welfare_identities() -> Outcome {
    let mut cfg = default_cfg();
    cfg.extension = 80;
    let base = structrade::scenario::Baseline::solve(audit_world(71, 5).map_err(|e| e.to_string())?, &cfg, None)
        .map_err(|e| e.to_string())?;
    let s = base.welfare_series();
    let mut worst = 0.0f64;
    for t0 in [0, 2] {
        for v in welfare_equivalent(&s, &s, &cfg, t0).map_err(|e| e.to_string())? {
            worst = worst.max(v.abs());
        }
        for x in [0.02, -0.035, 0.1] {
            let mut cf = s.clone();
            cf.c.mapv_inplace(|c| c * (1.0 + x));
            cf.tail_c.mapv_inplace(|c| c * (1.0 + x));
            for v in welfare_equivalent(&s, &cf, &cfg, t0).map_err(|e| e.to_string())? {
                worst = worst.max((v - 100.0 * x).abs());
            }
        }
    }
    ensure(worst <= 1e-10, || format!("largest error {worst:e}"))?;
    Ok(format!("identity and constant scaling exact to {worst:.1e}"))
}

// 8 --------------------------------------------------------------------------

fn twin_scenario() -> Scenario {
    Scenario {
        families: vec![PreferenceFamily::NonhomotheticCes, PreferenceFamily::HomotheticCes],
        report_years: 30,
        overrides: vec![TariffOverride {
            importers: Selection::Names(vec!["home".into()]),
            exporters: Selection::All,
            sectors: Selection::Names(vec!["manufacturing".into()]),
            years: YearRange { from: 2001, to: None },
            change_pp: 20.0,
        }],
        ..Scenario::null("home manufacturing tariff", 2001)
    }
}

fn twin_run() -> Result<ScenarioRun, String> {
    let mut cfg = default_cfg();
    cfg.extension = 150;
    run_scenario(developed_twin(4).map_err(|e| e.to_string())?, &cfg, &twin_scenario()).map_err(|e| e.to_string())
}

fn directions(run: &ScenarioRun) -> Outcome {
    let (nh, h) = (&run.reports[0], &run.reports[1]);
    let t0 = nh.t0;
    let eb = run.baseline.path.eqs[t0].eps_bar[0];
    ensure(eb > 1.0, || format!("home average income elasticity {eb} is not above one"))?;
    let (dm, ds, dsav) = (nh.d_va[[0, 1, t0]], nh.d_va[[0, 2, t0]], nh.d_saving[[0, t0]]);
    ensure(dm > 0.0, || format!("manufacturing va change {dm}"))?;
    ensure(ds < 0.0, || format!("services va change {ds}"))?;
    ensure(dsav < 0.0, || format!("saving rate change {dsav}"))?;
    ensure(nh.welfare[0] > 0.0 && nh.welfare[1] < 0.0, || format!("welfare {:?}", nh.welfare))?;
    ensure(h.welfare[0] > nh.welfare[0], || format!("homothetic {} vs nonhomothetic {}", h.welfare[0], nh.welfare[0]))?;
    Ok(format!(
        "va_m {dm:+.3}pp, va_s {ds:+.3}pp, saving {dsav:+.3}pp; welfare home {:+.3}% (h-ces {:+.3}%), foreign {:+.3}%",
        nh.welfare[0], h.welfare[0], nh.welfare[1]
    ))
}

// 9 --------------------------------------------------------------------------

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism(first: &ScenarioRun) -> Outcome {
    let second = twin_run()?;
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    write_run(a.path(), &first.reports).map_err(|e| e.to_string())?;
    write_run(b.path(), &second.reports).map_err(|e| e.to_string())?;
    let (fa, fb) = (dir_bytes(a.path()), dir_bytes(b.path()));
    ensure(!fa.is_empty() && fa == fb, || "scenario outputs differ between runs".to_string())?;
    Ok(format!("{} files bit-identical across two runs", fa.len()))
}

// ---------------------------------------------------------------------------

fn run(name: &str, number: usize, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("criterion {number} PASS {name}: {detail}");
            true
        }
        Err(why) => {
            println!("criterion {number} FAIL {name}: {why} ({secs:.1}s)");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    ok &= run("equation-residual audit", 1, residual_audit);
    ok &= run("stationarity", 2, stationarity);
    ok &= run("consumption Newton oracle", 3, newton_oracle);
    ok &= run("two-country certification", 4, twocountry_suite);
    ok &= run("two-country vs full solver", 5, cross_module);
    ok &= run("calibration round trip", 6, calibration_round_trip);
    ok &= run("welfare identities", 7, welfare_identities);
    let twin = catch_unwind(twin_run).unwrap_or_else(|_| Err("scenario run panicked".into()));
    match &twin {
        Ok(r) => {
            ok &= run("directional replication", 8, || directions(r));
            ok &= run("determinism", 9, || determinism(r));
        }
        Err(e) => {
            println!("criterion 8 FAIL directional replication: {e}");
            println!("criterion 9 FAIL determinism: {e}");
            ok = false;
        }
    }
    if !ok {
        std::process::exit(1);
    }
}
