//! Exogenous series of the quantitative model.

use ndarray::{Array1, Array2, Array3, Array4, Axis};

use crate::error::{Error, Result};

/// Per-(country, sector, period) exogenous series.
///
/// Arrays are dense and ordered by the `countries`, `sectors` and `periods`
/// lists. Bilateral arrays are indexed `[importer, exporter, sector, t]`,
/// input-output shifters `[country, using sector, input sector, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fundamentals {
    pub countries: Vec<String>,
    pub sectors: Vec<String>,
    pub periods: Vec<i32>,
    /// Average productivity `A[n,j,t]`.
    pub a: Array3<f64>,
    /// Iceberg costs `d[n,i,j,t]`, one on the diagonal.
    pub d: Array4<f64>,
    /// Ad-valorem tariffs `tau[n,i,j,t]`, zero on the diagonal.
    pub tau: Array4<f64>,
    pub kappa_io: Array4<f64>,
    pub kappa_k: Array3<f64>,
    /// Sectoral consumption shifters `Omega[n,j,t]`.
    pub omega_shift: Array3<f64>,
    pub zeta: Array2<f64>,
    pub l: Array2<f64>,
    pub delta: Array2<f64>,
    pub phi: Array2<f64>,
    pub gamma: Array3<f64>,
    pub alpha: Array3<f64>,
    pub k0: Array1<f64>,
}

/// Fundamentals of one period. Periods past the terminal year reuse the
/// terminal values.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodFundamentals {
    pub a: Array2<f64>,
    pub d: Array3<f64>,
    pub tau: Array3<f64>,
    pub kappa_io: Array3<f64>,
    pub kappa_k: Array2<f64>,
    pub omega_shift: Array2<f64>,
    pub zeta: Array1<f64>,
    pub l: Array1<f64>,
    pub delta: Array1<f64>,
    pub phi: Array1<f64>,
    pub gamma: Array2<f64>,
    pub alpha: Array2<f64>,
}

impl PeriodFundamentals {
    pub fn countries(&self) -> usize {
        self.a.nrows()
    }

    pub fn sectors(&self) -> usize {
        self.a.ncols()
    }

    /// Gross trade costs `b = d (1 + tau)`.
    pub fn b(&self) -> Array3<f64> {
        &self.d * &self.tau.mapv(|t| 1.0 + t)
    }

    /// Labor-weighted capital share `sum_j gamma alpha / sum_j gamma (1-alpha)`
    /// with unit output weights; used only as an initial guess.
    pub(crate) fn capital_labor_ratio_guess(&self) -> Array1<f64> {
        let n = self.countries();
        Array1::from_shape_fn(n, |c| {
            let ga: f64 = self.gamma.row(c).iter().zip(self.alpha.row(c)).map(|(g, a)| g * a).sum();
            let gl: f64 =
                self.gamma.row(c).iter().zip(self.alpha.row(c)).map(|(g, a)| g * (1.0 - a)).sum();
            ga / gl
        })
    }
}

impl Fundamentals {
    /// A flat world: unit productivity, free trade, uniform shifters and
    /// shares. Callers overwrite the arrays they care about.
    pub fn uniform(countries: Vec<String>, sectors: Vec<String>, periods: Vec<i32>) -> Self {
        let (n, j, t) = (countries.len(), sectors.len(), periods.len());
        let d = Array4::from_elem((n, n, j, t), 1.0);
        Self {
            a: Array3::from_elem((n, j, t), 1.0),
            d,
            tau: Array4::zeros((n, n, j, t)),
            kappa_io: Array4::from_elem((n, j, j, t), 1.0 / j as f64),
            kappa_k: Array3::from_elem((n, j, t), 1.0 / j as f64),
            omega_shift: Array3::from_elem((n, j, t), 1.0 / j as f64),
            zeta: Array2::from_elem((n, t), 1.0),
            l: Array2::from_elem((n, t), 1.0),
            delta: Array2::from_elem((n, t), 0.06),
            phi: Array2::zeros((n, t)),
            gamma: Array3::from_elem((n, j, t), 0.5),
            alpha: Array3::from_elem((n, j, t), 0.35),
            k0: Array1::from_elem(n, 1.0),
            countries,
            sectors,
            periods,
        }
    }

    pub fn n_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    pub fn n_periods(&self) -> usize {
        self.periods.len()
    }

    /// Index of a country by name.
    pub fn country_index(&self, name: &str) -> Result<usize> {
        self.countries
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::validation(format!("unknown country '{name}'")))
    }

    /// Index of a sector by name.
    pub fn sector_index(&self, name: &str) -> Result<usize> {
        self.sectors
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::validation(format!("unknown sector '{name}'")))
    }

    /// Fundamentals for period index `t`; indices past the terminal period
    /// return the terminal values.
    pub fn period(&self, t: usize) -> PeriodFundamentals {
        let t = t.min(self.n_periods() - 1);
        PeriodFundamentals {
            a: self.a.index_axis(Axis(2), t).to_owned(),
            d: self.d.index_axis(Axis(3), t).to_owned(),
            tau: self.tau.index_axis(Axis(3), t).to_owned(),
            kappa_io: self.kappa_io.index_axis(Axis(3), t).to_owned(),
            kappa_k: self.kappa_k.index_axis(Axis(2), t).to_owned(),
            omega_shift: self.omega_shift.index_axis(Axis(2), t).to_owned(),
            zeta: self.zeta.index_axis(Axis(1), t).to_owned(),
            l: self.l.index_axis(Axis(1), t).to_owned(),
            delta: self.delta.index_axis(Axis(1), t).to_owned(),
            phi: self.phi.index_axis(Axis(1), t).to_owned(),
            gamma: self.gamma.index_axis(Axis(2), t).to_owned(),
            alpha: self.alpha.index_axis(Axis(2), t).to_owned(),
        }
    }

    /// Terminal-period fundamentals.
    pub fn terminal(&self) -> PeriodFundamentals {
        self.period(self.n_periods() - 1)
    }

    /// Check shapes and element-wise ranges.
    pub fn validate(&self) -> Result<()> {
        let (n, j, t) = (self.n_countries(), self.n_sectors(), self.n_periods());
        if n == 0 || j == 0 || t == 0 {
            return Err(Error::validation("fundamentals need at least one country, sector and period"));
        }
        if self.periods.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("periods must be strictly increasing"));
        }
        let shape_checks: [(&str, &[usize], Vec<usize>); 13] = [
            ("A", self.a.shape(), vec![n, j, t]),
            ("d", self.d.shape(), vec![n, n, j, t]),
            ("tau", self.tau.shape(), vec![n, n, j, t]),
            ("kappa_io", self.kappa_io.shape(), vec![n, j, j, t]),
            ("kappa_k", self.kappa_k.shape(), vec![n, j, t]),
            ("Omega", self.omega_shift.shape(), vec![n, j, t]),
            ("zeta", self.zeta.shape(), vec![n, t]),
            ("L", self.l.shape(), vec![n, t]),
            ("delta", self.delta.shape(), vec![n, t]),
            ("phi", self.phi.shape(), vec![n, t]),
            ("gamma", self.gamma.shape(), vec![n, j, t]),
            ("alpha", self.alpha.shape(), vec![n, j, t]),
            ("K0", self.k0.shape(), vec![n]),
        ];
        for (name, got, want) in shape_checks.iter() {
            if *got != want.as_slice() {
                return Err(Error::validation(format!("{name} has shape {got:?}, expected {want:?}")));
            }
        }
        let positive = |name: &str, arr: &mut dyn Iterator<Item = &f64>| -> Result<()> {
            for &v in arr {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::validation(format!("{name} must be positive and finite, found {v}")));
                }
            }
            Ok(())
        };
        positive("A", &mut self.a.iter())?;
        positive("zeta", &mut self.zeta.iter())?;
        positive("L", &mut self.l.iter())?;
        positive("K0", &mut self.k0.iter())?;
        for (idx, &v) in self.d.indexed_iter() {
            let (a, b, _, _) = idx;
            if a == b && v != 1.0 {
                return Err(Error::validation(format!("d diagonal must equal 1, found {v} at {idx:?}")));
            }
            if !(v >= 1.0) || !v.is_finite() {
                return Err(Error::validation(format!("d must be >= 1, found {v} at {idx:?}")));
            }
        }
        for (idx, &v) in self.tau.indexed_iter() {
            let (a, b, _, _) = idx;
            if a == b && v != 0.0 {
                return Err(Error::validation(format!("tau diagonal must be 0, found {v} at {idx:?}")));
            }
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("tau must be >= 0, found {v} at {idx:?}")));
            }
        }
        if self.kappa_io.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::validation("kappa_io must be non-negative"));
        }
        for c in 0..n {
            for s in 0..j {
                for p in 0..t {
                    let row_sum: f64 = (0..j).map(|k| self.kappa_io[[c, s, k, p]]).sum();
                    if (row_sum - 1.0).abs() > 1e-9 {
                        return Err(Error::validation(format!(
                            "kappa_io rows must sum to one (country {c}, sector {s}, period {p}: {row_sum})"
                        )));
                    }
                }
            }
            for p in 0..t {
                let ks: f64 = (0..j).map(|k| self.kappa_k[[c, k, p]]).sum();
                if (ks - 1.0).abs() > 1e-9 {
                    return Err(Error::validation(format!(
                        "kappa_k must sum to one (country {c}, period {p}: {ks})"
                    )));
                }
                let om: f64 = (0..j).map(|k| self.omega_shift[[c, k, p]]).sum();
                if !(om > 0.0) {
                    return Err(Error::validation(format!(
                        "Omega needs a positive entry (country {c}, period {p})"
                    )));
                }
            }
        }
        if self.kappa_k.iter().chain(self.omega_shift.iter()).any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::validation("kappa_k and Omega must be non-negative"));
        }
        for &v in self.delta.iter() {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::validation(format!("delta must lie in (0,1], found {v}")));
            }
        }
        for &v in self.phi.iter() {
            if !(v > -1.0 && v < 1.0) {
                return Err(Error::validation(format!("phi must lie in (-1,1), found {v}")));
            }
        }
        for (name, arr) in [("gamma", &self.gamma), ("alpha", &self.alpha)] {
            for &v in arr.iter() {
                if !(v > 0.0 && v <= 1.0) || (name == "alpha" && v >= 1.0) {
                    return Err(Error::validation(format!("{name} out of range: {v}")));
                }
            }
        }
        Ok(())
    }

    /// Copy of the fundamentals restricted to periods `from..` (used when a
    /// path is re-solved from a surprise period).
    pub fn from_period(&self, from: usize) -> Self {
        let from = from.min(self.n_periods() - 1);
        let s2 = |a: &Array2<f64>| a.slice(ndarray::s![.., from..]).to_owned();
        let s3 = |a: &Array3<f64>| a.slice(ndarray::s![.., .., from..]).to_owned();
        let s4 = |a: &Array4<f64>| a.slice(ndarray::s![.., .., .., from..]).to_owned();
        Self {
            countries: self.countries.clone(),
            sectors: self.sectors.clone(),
            periods: self.periods[from..].to_vec(),
            a: s3(&self.a),
            d: s4(&self.d),
            tau: s4(&self.tau),
            kappa_io: s4(&self.kappa_io),
            kappa_k: s3(&self.kappa_k),
            omega_shift: s3(&self.omega_shift),
            zeta: s2(&self.zeta),
            l: s2(&self.l),
            delta: s2(&self.delta),
            phi: s2(&self.phi),
            gamma: s3(&self.gamma),
            alpha: s3(&self.alpha),
            k0: self.k0.clone(),
        }
    }
}
