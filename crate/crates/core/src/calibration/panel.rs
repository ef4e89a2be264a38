//! Observed data the calibration consumes, with CSV input and output.

use std::path::Path;

use ndarray::{Array1, Array2, Array3, Array4};

use crate::error::{Error, Result};
use crate::io::{write_rows, Column, Labels, LongRow, LongTable};

/// Bilateral covariates of the gravity equation.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityCovariates {
    /// Distance in miles `[n, i]`.
    pub distance: Array2<f64>,
    /// Common border `[n, i, t]`.
    pub border: Array3<f64>,
    /// Currency union `[n, i, t]`.
    pub currency_union: Array3<f64>,
    /// Regional trade agreement `[n, i, t]`.
    pub rta: Array3<f64>,
}

/// Upper bounds (miles) of the distance intervals; the last interval is
/// open-ended.
pub const DISTANCE_BOUNDS: [f64; 5] = [350.0, 750.0, 1500.0, 3000.0, 6000.0];

/// Index of the distance interval containing `miles`.
pub fn distance_bin(miles: f64) -> usize {
    DISTANCE_BOUNDS.iter().position(|&b| miles <= b).unwrap_or(DISTANCE_BOUNDS.len())
}

impl GravityCovariates {
    /// No covariates beyond distance, all pairs in the first interval.
    pub fn empty(n: usize, t: usize) -> Self {
        Self {
            distance: Array2::zeros((n, n)),
            border: Array3::zeros((n, n, t)),
            currency_union: Array3::zeros((n, n, t)),
            rta: Array3::zeros((n, n, t)),
        }
    }
}

/// A panel of observed variables for countries `n`, sectors `j` and years
/// `t`. The first year is the reference year.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedPanel {
    pub countries: Vec<String>,
    pub sectors: Vec<String>,
    pub years: Vec<i32>,
    /// Index of the reference country.
    pub reference: usize,
    /// Expenditure shares `[importer, exporter, sector, t]`.
    pub pi: Array4<f64>,
    pub tau: Array4<f64>,
    /// Intermediate cost shares `[country, using sector, input sector, t]`.
    pub g_io: Array4<f64>,
    /// Investment-good cost shares `[country, sector, t]`.
    pub g_k: Array3<f64>,
    /// Gross-output price index of the reference country `[sector, t]`.
    pub p_ref: Array2<f64>,
    pub value_added: Array3<f64>,
    pub gross_output: Array3<f64>,
    pub labor_share: Array3<f64>,
    pub employment: Array2<f64>,
    /// Nominal gross fixed capital formation.
    pub gfcf: Array2<f64>,
    /// Nominal consumption expenditure.
    pub consumption: Array2<f64>,
    /// Consumption expenditure shares `[country, sector, t]`.
    pub consumption_shares: Array3<f64>,
    pub population: Array2<f64>,
    /// Nominal value of the initial capital stock.
    pub capital0_value: Array1<f64>,
    pub delta: Array2<f64>,
    pub phi: Array2<f64>,
    pub covariates: GravityCovariates,
}

impl ObservedPanel {
    pub fn n(&self) -> usize {
        self.countries.len()
    }

    pub fn j(&self) -> usize {
        self.sectors.len()
    }

    pub fn t(&self) -> usize {
        self.years.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, j, t) = (self.n(), self.j(), self.t());
        if n < 2 || j == 0 || t == 0 {
            return Err(Error::validation("panel needs two countries, one sector and one year"));
        }
        if self.reference >= n {
            return Err(Error::validation("reference country index out of range"));
        }
        let shapes: [(&str, &[usize], Vec<usize>); 19] = [
            ("pi", self.pi.shape(), vec![n, n, j, t]),
            ("tau", self.tau.shape(), vec![n, n, j, t]),
            ("g_io", self.g_io.shape(), vec![n, j, j, t]),
            ("g_k", self.g_k.shape(), vec![n, j, t]),
            ("p_ref", self.p_ref.shape(), vec![j, t]),
            ("value_added", self.value_added.shape(), vec![n, j, t]),
            ("gross_output", self.gross_output.shape(), vec![n, j, t]),
            ("labor_share", self.labor_share.shape(), vec![n, j, t]),
            ("employment", self.employment.shape(), vec![n, t]),
            ("gfcf", self.gfcf.shape(), vec![n, t]),
            ("consumption", self.consumption.shape(), vec![n, t]),
            ("consumption_shares", self.consumption_shares.shape(), vec![n, j, t]),
            ("population", self.population.shape(), vec![n, t]),
            ("capital0", self.capital0_value.shape(), vec![n]),
            ("delta", self.delta.shape(), vec![n, t]),
            ("phi", self.phi.shape(), vec![n, t]),
            ("distance", self.covariates.distance.shape(), vec![n, n]),
            ("border", self.covariates.border.shape(), vec![n, n, t]),
            ("rta", self.covariates.rta.shape(), vec![n, n, t]),
        ];
        for (name, got, want) in shapes.iter() {
            if *got != want.as_slice() {
                return Err(Error::validation(format!("{name} has shape {got:?}, expected {want:?}")));
            }
        }
        if self.covariates.currency_union.shape() != [n, n, t] {
            return Err(Error::validation("currency_union has the wrong shape"));
        }
        for c in 0..n {
            for k in 0..j {
                for p in 0..t {
                    let mut sum = 0.0;
                    for i in 0..n {
                        let v = self.pi[[c, i, k, p]];
                        if !(0.0..=1.0).contains(&v) {
                            return Err(Error::Data(format!("trade share outside [0,1]: {v}")));
                        }
                        sum += v;
                    }
                    if sum > 1.0 + 1e-9 {
                        return Err(Error::Data(format!("trade shares of {} in {} sum to {sum}", self.countries[c], self.years[p])));
                    }
                    if !(self.pi[[c, c, k, p]] > 0.0) {
                        return Err(Error::Data(format!(
                            "missing own trade share for {} in sector {}, {}",
                            self.countries[c], self.sectors[k], self.years[p]
                        )));
                    }
                }
            }
        }
        if self.p_ref.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Data("reference-country prices must be positive".into()));
        }
        for (name, arr) in [("value_added", &self.value_added), ("gross_output", &self.gross_output)] {
            if arr.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Data(format!("{name} must be positive")));
            }
        }
        if self.labor_share.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Data("labor shares must lie in (0,1)".into()));
        }
        for (name, arr) in [
            ("employment", &self.employment),
            ("consumption", &self.consumption),
            ("population", &self.population),
        ] {
            if arr.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Data(format!("{name} must be positive")));
            }
        }
        if self.gfcf.iter().any(|&v| v < 0.0) {
            return Err(Error::Data("gross fixed capital formation must be non-negative".into()));
        }
        if self.capital0_value.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Data("initial capital must be positive".into()));
        }
        Ok(())
    }

    fn labels(&self) -> Labels<'_> {
        Labels { countries: &self.countries, sectors: &self.sectors, years: &self.years }
    }

    /// Write every array to `dir` as a long table. Bilateral covariates use
    /// the `partner` column; `distance.csv` has neither sector nor year.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.display().to_string(), source: e })?;
        let lab = self.labels();
        let bilateral3 = |a: &Array3<f64>| -> Vec<LongRow> {
            let mut out = Vec::new();
            for (c, cn) in self.countries.iter().enumerate() {
                for (i, pn) in self.countries.iter().enumerate() {
                    for (t, y) in self.years.iter().enumerate() {
                        out.push(LongRow { country: cn.clone(), partner: pn.clone(), sector: String::new(), year: Some(*y), value: a[[c, i, t]] });
                    }
                }
            }
            out
        };
        let mut dist = Vec::new();
        for (c, cn) in self.countries.iter().enumerate() {
            for (i, pn) in self.countries.iter().enumerate() {
                dist.push(LongRow { country: cn.clone(), partner: pn.clone(), sector: String::new(), year: None, value: self.covariates.distance[[c, i]] });
            }
        }
        let files: Vec<(&str, Vec<LongRow>)> = vec![
            ("pi.csv", lab.bilateral(&self.pi)),
            ("tau.csv", lab.bilateral(&self.tau)),
            ("g_io.csv", lab.input_output(&self.g_io)),
            ("g_k.csv", lab.country_sector_year(&self.g_k)),
            ("p_ref.csv", lab.sector_year(&self.countries[self.reference], &self.p_ref)),
            ("value_added.csv", lab.country_sector_year(&self.value_added)),
            ("gross_output.csv", lab.country_sector_year(&self.gross_output)),
            ("labor_share.csv", lab.country_sector_year(&self.labor_share)),
            ("employment.csv", lab.country_year(&self.employment)),
            ("gfcf.csv", lab.country_year(&self.gfcf)),
            ("consumption.csv", lab.country_year(&self.consumption)),
            ("consumption_shares.csv", lab.country_sector_year(&self.consumption_shares)),
            ("population.csv", lab.country_year(&self.population)),
            ("capital0.csv", lab.country_vec(&self.capital0_value)),
            ("delta.csv", lab.country_year(&self.delta)),
            ("phi.csv", lab.country_year(&self.phi)),
            ("distance.csv", dist),
            ("border.csv", bilateral3(&self.covariates.border)),
            ("currency_union.csv", bilateral3(&self.covariates.currency_union)),
            ("rta.csv", bilateral3(&self.covariates.rta)),
        ];
        for (name, rows) in files {
            write_rows(&dir.join(name), &rows)?;
        }
        Ok(())
    }

    /// Read a panel written by [`ObservedPanel::write`]. Labels come from
    /// `pi.csv`; the reference country is the one named in `p_ref.csv`.
    /// Missing covariate files are treated as all-zero indicators.
    pub fn read(dir: &Path) -> Result<Self> {
        let pi_tab = LongTable::read(&dir.join("pi.csv"))?;
        let countries = pi_tab.labels(Column::Country);
        let sectors = pi_tab.labels(Column::Sector);
        let years = pi_tab.years();
        let lab = Labels { countries: &countries, sectors: &sectors, years: &years };
        let tab = |name: &str| LongTable::read(&dir.join(name));
        let p_tab = tab("p_ref.csv")?;
        let ref_name = p_tab
            .labels(Column::Country)
            .first()
            .cloned()
            .ok_or_else(|| Error::Data("p_ref.csv is empty".into()))?;
        let reference = countries
            .iter()
            .position(|c| *c == ref_name)
            .ok_or_else(|| Error::Data(format!("reference country '{ref_name}' does not appear in pi.csv")))?;
        let (n, t) = (countries.len(), years.len());
        let read_bilateral3 = |name: &str| -> Result<Array3<f64>> {
            let p = dir.join(name);
            let mut a = Array3::zeros((n, n, t));
            if !p.exists() {
                return Ok(a);
            }
            let tb = LongTable::read(&p)?;
            for (c, cn) in countries.iter().enumerate() {
                for (i, pn) in countries.iter().enumerate() {
                    for (k, y) in years.iter().enumerate() {
                        a[[c, i, k]] = tb.get(cn, pn, "", Some(*y))?;
                    }
                }
            }
            Ok(a)
        };
        let mut distance = Array2::zeros((n, n));
        if dir.join("distance.csv").exists() {
            let tb = tab("distance.csv")?;
            for (c, cn) in countries.iter().enumerate() {
                for (i, pn) in countries.iter().enumerate() {
                    distance[[c, i]] = tb.get(cn, pn, "", None)?;
                }
            }
        }
        let panel = Self {
            reference,
            pi: lab.read_bilateral(&pi_tab)?,
            tau: lab.read_bilateral(&tab("tau.csv")?)?,
            g_io: lab.read_input_output(&tab("g_io.csv")?)?,
            g_k: lab.read_country_sector_year(&tab("g_k.csv")?)?,
            p_ref: lab.read_sector_year(&p_tab, &ref_name)?,
            value_added: lab.read_country_sector_year(&tab("value_added.csv")?)?,
            gross_output: lab.read_country_sector_year(&tab("gross_output.csv")?)?,
            labor_share: lab.read_country_sector_year(&tab("labor_share.csv")?)?,
            employment: lab.read_country_year(&tab("employment.csv")?)?,
            gfcf: lab.read_country_year(&tab("gfcf.csv")?)?,
            consumption: lab.read_country_year(&tab("consumption.csv")?)?,
            consumption_shares: lab.read_country_sector_year(&tab("consumption_shares.csv")?)?,
            population: lab.read_country_year(&tab("population.csv")?)?,
            capital0_value: lab.read_country_vec(&tab("capital0.csv")?)?,
            delta: lab.read_country_year(&tab("delta.csv")?)?,
            phi: lab.read_country_year(&tab("phi.csv")?)?,
            covariates: GravityCovariates {
                distance,
                border: read_bilateral3("border.csv")?,
                currency_union: read_bilateral3("currency_union.csv")?,
                rta: read_bilateral3("rta.csv")?,
            },
            countries,
            sectors,
            years,
        };
        panel.validate()?;
        Ok(panel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_intervals() {
        assert_eq!(distance_bin(0.0), 0);
        assert_eq!(distance_bin(350.0), 0);
        assert_eq!(distance_bin(351.0), 1);
        assert_eq!(distance_bin(2999.0), 3);
        assert_eq!(distance_bin(6000.1), 5);
    }
}
