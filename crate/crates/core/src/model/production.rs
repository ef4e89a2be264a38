//! Production side: unit costs, CES composites, Eaton-Kortum price indices
//! and trade shares.

use crate::error::{Error, Result};
use crate::num::log_sum_exp_weighted;

/// Cost of the input bundle `r^(gamma alpha) w^(gamma (1-alpha)) xi^(1-gamma)`.
pub fn input_bundle_cost(r: f64, w: f64, xi: f64, gamma: f64, alpha: f64) -> Result<f64> {
    if !(r > 0.0 && w > 0.0 && xi > 0.0) {
        return Err(Error::domain(
            "input_bundle_cost",
            format!("factor prices must be positive (r={r}, w={w}, xi={xi})"),
        ));
    }
    Ok(log_input_bundle_cost(r.ln(), w.ln(), xi.ln(), gamma, alpha).exp())
}

#[inline]
pub(crate) fn log_input_bundle_cost(lr: f64, lw: f64, lxi: f64, gamma: f64, alpha: f64) -> f64 {
    gamma * alpha * lr + gamma * (1.0 - alpha) * lw + (1.0 - gamma) * lxi
}

/// Log of a CES composite `[sum kappa P^(1-s)]^(1/(1-s))` given log prices.
#[inline]
pub(crate) fn log_ces_index(log_p: &[f64], kappa: &[f64], s: f64) -> f64 {
    let z: Vec<f64> = log_p.iter().map(|lp| (1.0 - s) * lp).collect();
    log_sum_exp_weighted(kappa, &z) / (1.0 - s)
}

fn check_composite(op: &'static str, p: &[f64], kappa: &[f64], s: f64) -> Result<()> {
    if p.len() != kappa.len() || p.is_empty() {
        return Err(Error::domain(op, "price and shifter rows differ in length"));
    }
    if p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::domain(op, "prices must be positive"));
    }
    if kappa.iter().any(|&k| k < 0.0) || !kappa.iter().any(|&k| k > 0.0) {
        return Err(Error::domain(op, "shifters must be non-negative with a positive entry"));
    }
    if s == 1.0 || !(s > 0.0) {
        return Err(Error::domain(op, format!("elasticity must be positive and different from 1, got {s}")));
    }
    Ok(())
}

/// Price of the composite intermediate input of one using sector.
pub fn intermediate_price_index(p_row: &[f64], kappa_row: &[f64], sigma_io: f64) -> Result<f64> {
    check_composite("intermediate_price_index", p_row, kappa_row, sigma_io)?;
    let lp: Vec<f64> = p_row.iter().map(|x| x.ln()).collect();
    Ok(log_ces_index(&lp, kappa_row, sigma_io).exp())
}

/// Price of the capital good.
pub fn capital_good_price(p_row: &[f64], kappa_k_row: &[f64], sigma_k: f64) -> Result<f64> {
    check_composite("capital_good_price", p_row, kappa_k_row, sigma_k)?;
    let lp: Vec<f64> = p_row.iter().map(|x| x.ln()).collect();
    Ok(log_ces_index(&lp, kappa_k_row, sigma_k).exp())
}

/// Cost shares of a CES composite: `kappa P^(1-s) / sum kappa P^(1-s)`.
pub fn composite_cost_shares(p_row: &[f64], kappa_row: &[f64], s: f64) -> Vec<f64> {
    let z: Vec<f64> = p_row.iter().map(|x| (1.0 - s) * x.ln()).collect();
    let lse = log_sum_exp_weighted(kappa_row, &z);
    kappa_row
        .iter()
        .zip(&z)
        .map(|(&k, &v)| if k > 0.0 { k * (v - lse).exp() } else { 0.0 })
        .collect()
}

/// Log sectoral price index in one importer given log effective unit costs
/// `ln(c_i b_ni / A_i)` of every source.
#[inline]
pub(crate) fn log_price_from_costs(log_unit: &[f64], theta: f64) -> f64 {
    let z: Vec<f64> = log_unit.iter().map(|u| -theta * u).collect();
    let ones = vec![1.0; z.len()];
    -log_sum_exp_weighted(&ones, &z) / theta
}

fn effective_log_costs(c_tilde: &[f64], a: &[f64], b_row: &[f64]) -> Result<Vec<f64>> {
    if c_tilde.is_empty() {
        return Err(Error::domain("sectoral_price_index", "empty country set"));
    }
    if c_tilde.len() != a.len() || a.len() != b_row.len() {
        return Err(Error::domain("sectoral_price_index", "source dimensions disagree"));
    }
    if c_tilde.iter().chain(a).chain(b_row).any(|&x| !(x > 0.0)) {
        return Err(Error::domain("sectoral_price_index", "costs, productivities and trade costs must be positive"));
    }
    Ok((0..a.len()).map(|i| c_tilde[i].ln() + b_row[i].ln() - a[i].ln()).collect())
}

/// Sectoral price index of one importer:
/// `[sum_i (c_i b_ni / A_i)^(-theta)]^(-1/theta)`.
///
/// `c_tilde` and `a` are indexed by source country; `b_row` holds the gross
/// trade costs `b_ni` of the importer from every source.
pub fn sectoral_price_index(c_tilde: &[f64], a: &[f64], b_row: &[f64], theta: f64) -> Result<f64> {
    let u = effective_log_costs(c_tilde, a, b_row)?;
    Ok(log_price_from_costs(&u, theta).exp())
}

/// Import shares of one importer from every source given its price index.
pub fn trade_shares(c_tilde: &[f64], a: &[f64], b_row: &[f64], theta: f64, p: f64) -> Result<Vec<f64>> {
    let u = effective_log_costs(c_tilde, a, b_row)?;
    if !(p > 0.0) {
        return Err(Error::domain("trade_shares", "price index must be positive"));
    }
    let lp = p.ln();
    Ok(u.iter().map(|ui| (-theta * (ui - lp)).exp()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_cost_identity_and_labor_limit() {
        assert_eq!(input_bundle_cost(1.0, 1.0, 1.0, 0.3, 0.6).unwrap(), 1.0);
        assert!((input_bundle_cost(5.0, 2.5, 9.0, 1.0, 0.0).unwrap() - 2.5).abs() < 1e-15);
        let v = input_bundle_cost(2.0, 1.0, 3.0, 0.5, 0.4).unwrap();
        let oracle = 2f64.powf(0.2) * 3f64.powf(0.5);
        assert!((v - oracle).abs() < 1e-14);
        assert!(input_bundle_cost(0.0, 1.0, 1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn intermediate_index_cases() {
        let k = [0.2, 0.3, 0.5];
        assert!((intermediate_price_index(&[1.0; 3], &k, 0.38).unwrap() - 1.0).abs() < 1e-15);
        let v = intermediate_price_index(&[1.0, 5.0, 9.0], &[0.0, 1.0, 0.0], 0.38).unwrap();
        assert!((v - 5.0).abs() < 1e-13);
        let p = [1.0, 2.0, 4.0];
        let v = intermediate_price_index(&p, &[1.0 / 3.0; 3], 0.38).unwrap();
        let brute = p.iter().map(|x: &f64| x.powf(0.62) / 3.0).sum::<f64>().powf(1.0 / 0.62);
        assert!((v - brute).abs() < 1e-13);
        assert!(intermediate_price_index(&p, &[0.0; 3], 0.38).is_err());
    }

    #[test]
    fn capital_price_cases() {
        assert!((capital_good_price(&[1.0; 3], &[0.2, 0.5, 0.3], 0.29).unwrap() - 1.0).abs() < 1e-15);
        assert!((capital_good_price(&[1.0, 2.0, 3.0], &[0.0, 0.0, 1.0], 0.29).unwrap() - 3.0).abs() < 1e-13);
        let p = [1.0f64, 2.0, 3.0];
        let k = [0.2, 0.5, 0.3];
        let brute = (0..3).map(|j| k[j] * p[j].powf(0.71)).sum::<f64>().powf(1.0 / 0.71);
        assert!((capital_good_price(&p, &k, 0.29).unwrap() - brute).abs() < 1e-13);
    }

    #[test]
    fn price_index_cases() {
        assert!((sectoral_price_index(&[2.0], &[1.0], &[1.0], 4.0).unwrap() - 2.0).abs() < 1e-15);
        let v = sectoral_price_index(&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0], 4.0).unwrap();
        assert!((v - 2f64.powf(-0.25)).abs() < 1e-15);
        // Two-country closed form with w = (1.3, 1), A = (1.2, 1), d = 1.5, tau = 0.1.
        let th = 4.0;
        let b = 1.5 * 1.1;
        let ph = sectoral_price_index(&[1.3, 1.0], &[1.2, 1.0], &[1.0, b], th).unwrap();
        let closed = ((1.3f64 / 1.2).powf(-th) + (b / 1.0f64).powf(-th)).powf(-1.0 / th);
        assert!((ph - closed).abs() < 1e-14);
        assert!(sectoral_price_index(&[], &[], &[], 4.0).is_err());
    }

    #[test]
    fn shares_sum_to_one_and_respond_to_tariffs() {
        let c = [1.0, 1.2, 0.8];
        let a = [1.0, 1.5, 0.7];
        let b = [1.0, 1.8, 2.1];
        let th = 4.55;
        let p = sectoral_price_index(&c, &a, &b, th).unwrap();
        let pi = trade_shares(&c, &a, &b, th, p).unwrap();
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let b2 = [1.0, 1.8 * 1.1, 2.1];
        let pi2 = trade_shares(&c, &a, &b2, th, p).unwrap();
        assert!((pi2[1] / pi[1] - 1.1f64.powf(-th)).abs() < 1e-12);
        // autarky limit
        let pi3 = trade_shares(&c, &a, &[1.0, 1e8, 1e8], th, sectoral_price_index(&c, &a, &[1.0, 1e8, 1e8], th).unwrap()).unwrap();
        assert!((pi3[0] - 1.0).abs() < 1e-12);
        let sym = trade_shares(&[1.0, 1.0], &[1.0, 1.0], &[1.3, 1.3], th, sectoral_price_index(&[1.0, 1.0], &[1.0, 1.0], &[1.3, 1.3], th).unwrap()).unwrap();
        assert!((sym[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn composite_shares_normalize() {
        let g = composite_cost_shares(&[1.0, 2.0, 0.5], &[0.2, 0.3, 0.5], 0.38);
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let g = composite_cost_shares(&[1.0, 1.0, 1.0], &[0.2, 0.3, 0.5], 0.38);
        assert!((g[1] - 0.3).abs() < 1e-15);
    }
}
