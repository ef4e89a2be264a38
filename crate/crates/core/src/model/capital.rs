//! Capital accumulation with adjustment costs.

use crate::error::{Error, Result};

/// Investment needed to move capital from `K` to `K'` together with the
/// partial derivatives of that requirement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Investment {
    /// `I = delta^(1-1/lambda) K [K'/K - (1-delta)]^(1/lambda)`.
    pub i: f64,
    /// Derivative with respect to `K'`.
    pub phi1: f64,
    /// Derivative with respect to `K`.
    pub phi2: f64,
}

/// Invert the law of motion `K' = (1-delta) K + I^lambda (delta K)^(1-lambda)`.
pub fn investment_requirement(k_next: f64, k: f64, delta: f64, lambda: f64) -> Result<Investment> {
    if !(k > 0.0) {
        return Err(Error::domain("investment_requirement", format!("capital must be positive, got {k}")));
    }
    let g = k_next / k - (1.0 - delta);
    if !(g > 0.0) {
        return Err(Error::domain(
            "investment_requirement",
            format!("K'={k_next} does not exceed undepreciated capital (1-delta)K={}", (1.0 - delta) * k),
        ));
    }
    let inv_l = 1.0 / lambda;
    let scale = delta.powf(1.0 - inv_l);
    let i = scale * k * g.powf(inv_l);
    let phi1 = inv_l * scale * g.powf(inv_l - 1.0);
    let phi2 = phi1 * ((lambda - 1.0) * k_next / k - lambda * (1.0 - delta));
    Ok(Investment { i, phi1, phi2 })
}

/// Next-period capital from current capital and investment.
pub fn next_capital(k: f64, i: f64, delta: f64, lambda: f64) -> f64 {
    (1.0 - delta) * k + i.powf(lambda) * (delta * k).powf(1.0 - lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frictionless_and_stationary_cases() {
        let v = investment_requirement(10.5, 10.0, 0.06, 1.0).unwrap();
        assert!((v.i - (10.5 - 0.94 * 10.0)).abs() < 1e-12);
        for lam in [0.3, 0.75, 1.0] {
            let v = investment_requirement(7.0, 7.0, 0.08, lam).unwrap();
            assert!((v.i - 0.56).abs() < 1e-12);
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let (kn, k, d, l) = (10.5, 10.0, 0.06, 0.75);
        let v = investment_requirement(kn, k, d, l).unwrap();
        let h = 1e-6;
        let f = |a: f64, b: f64| investment_requirement(a, b, d, l).unwrap().i;
        let fd1 = (f(kn + h, k) - f(kn - h, k)) / (2.0 * h);
        let fd2 = (f(kn, k + h) - f(kn, k - h)) / (2.0 * h);
        assert!((fd1 - v.phi1).abs() / v.phi1.abs() < 1e-6);
        assert!((fd2 - v.phi2).abs() / v.phi2.abs() < 1e-6);
    }

    #[test]
    fn law_of_motion_round_trip() {
        let v = investment_requirement(3.3, 3.0, 0.1, 0.75).unwrap();
        assert!((next_capital(3.0, v.i, 0.1, 0.75) - 3.3).abs() < 1e-12);
    }

    #[test]
    fn irreversibility_boundary() {
        assert!(investment_requirement(0.9, 1.0, 0.1, 0.75).is_err());
        assert!(investment_requirement(1.0, 0.0, 0.1, 0.75).is_err());
    }
}
