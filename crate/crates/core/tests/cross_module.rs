//! The two-country closed forms against the full single-period solver.

use structrade::config::PreferenceFamily;
use structrade::static_eq::solve_period;
use structrade::synthetic::{twocountry_as_world, twocountry_instances};
use structrade::twocountry::{self, HOME};

fn worst_gap(family: PreferenceFamily, seed: u64) -> f64 {
    let mut worst = 0.0f64;
    for (k, mut inst) in twocountry_instances(seed, 8, family).into_iter().enumerate() {
        if k % 2 == 1 {
            inst = inst.with_uniform_tariff(0.05 * k as f64);
        }
        let closed = twocountry::solve(&inst).unwrap();
        let (inputs, cfg) = twocountry_as_world(&inst, 1e-6).unwrap();
        let full = solve_period(&inputs, &cfg, None).unwrap();
        worst = worst.max((full.w[0] / full.w[1] / closed.w - 1.0).abs());
        for s in 0..inst.sectors() {
            worst = worst.max((full.omega[[0, s]] - closed.omega[HOME][s]).abs());
            worst = worst.max((full.va_share[[0, s]] - closed.va[HOME][s]).abs());
            worst = worst.max((full.omega[[1, s]] - closed.omega[1][s]).abs());
            worst = worst.max((full.va_share[[1, s]] - closed.va[1][s]).abs());
        }
    }
    worst
}

#[test]
fn closed_forms_match_full_solver() {
    for family in [PreferenceFamily::NonhomotheticCes, PreferenceFamily::HomotheticCes, PreferenceFamily::CobbDouglas] {
        let gap = worst_gap(family, 5);
        assert!(gap <= 1e-5, "{family:?}: {gap:e}");
    }
}
