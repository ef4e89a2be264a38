//! Long-format CSV tables.
//!
//! Every array is stored in its own file with the header
//! `country,partner,sector,year,value`. Columns an array does not use are
//! left empty. Bilateral arrays put the exporter in `partner`; input-output
//! arrays put the input sector in `partner` and the using sector in
//! `sector`. Values are written with Rust's shortest round-trip float
//! formatting, so reading a file back reproduces the array bit for bit.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use ndarray::{Array1, Array2, Array3, Array4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fundamentals::Fundamentals;
use crate::model::PeriodEquilibrium;

/// One record of a long table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRow {
    pub country: String,
    #[serde(default)]
    pub partner: String,
    #[serde(default)]
    pub sector: String,
    pub year: Option<i32>,
    pub value: f64,
}

type Key = (String, String, String, Option<i32>);

/// A parsed long table keyed by its label columns.
#[derive(Debug, Clone, Default)]
pub struct LongTable {
    pub rows: Vec<LongRow>,
    index: HashMap<Key, usize>,
    source: String,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Csv { path: path.display().to_string(), source: e }
}

impl LongTable {
    pub fn from_rows(rows: Vec<LongRow>, source: impl Into<String>) -> Result<Self> {
        let source = source.into();
        let mut index = HashMap::with_capacity(rows.len());
        for (k, r) in rows.iter().enumerate() {
            if !r.value.is_finite() {
                return Err(Error::Data(format!("{source}: non-finite value in row {}", k + 2)));
            }
            let key = (r.country.clone(), r.partner.clone(), r.sector.clone(), r.year);
            if index.insert(key, k).is_some() {
                return Err(Error::Data(format!(
                    "{source}: duplicate entry for ({}, {}, {}, {:?})",
                    r.country, r.partner, r.sector, r.year
                )));
            }
        }
        Ok(Self { rows, index, source })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err(path))?;
        let headers = rdr.headers().map_err(csv_err(path))?.clone();
        let want = ["country", "partner", "sector", "year", "value"];
        if headers.iter().collect::<Vec<_>>() != want {
            return Err(Error::Data(format!(
                "{}: header must be {}, found {}",
                path.display(),
                want.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            rows.push(rec.map_err(csv_err(path))?);
        }
        Self::from_rows(rows, path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.rows)
    }

    pub fn get(&self, country: &str, partner: &str, sector: &str, year: Option<i32>) -> Result<f64> {
        let key = (country.to_string(), partner.to_string(), sector.to_string(), year);
        self.index.get(&key).map(|&k| self.rows[k].value).ok_or_else(|| {
            Error::Data(format!(
                "{}: missing entry country={country} partner={partner} sector={sector} year={}",
                self.source,
                year.map(|y| y.to_string()).unwrap_or_default()
            ))
        })
    }

    /// Distinct values of a label column in order of first appearance.
    pub fn labels(&self, column: Column) -> Vec<String> {
        let mut seen = Vec::new();
        for r in &self.rows {
            let v = match column {
                Column::Country => &r.country,
                Column::Partner => &r.partner,
                Column::Sector => &r.sector,
            };
            if !v.is_empty() && !seen.contains(v) {
                seen.push(v.clone());
            }
        }
        seen
    }

    /// Distinct years in increasing order.
    pub fn years(&self) -> Vec<i32> {
        let set: std::collections::BTreeSet<i32> = self.rows.iter().filter_map(|r| r.year).collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Column {
    Country,
    Partner,
    Sector,
}

pub fn write_rows(path: &Path, rows: &[LongRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["country", "partner", "sector", "year", "value"]).map_err(csv_err(path))?;
    for r in rows {
        let year = r.year.map(|y| y.to_string()).unwrap_or_default();
        let value = r.value.to_string();
        w.write_record([r.country.as_str(), r.partner.as_str(), r.sector.as_str(), year.as_str(), value.as_str()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

fn row(country: &str, partner: &str, sector: &str, year: Option<i32>, value: f64) -> LongRow {
    LongRow { country: country.into(), partner: partner.into(), sector: sector.into(), year, value }
}

/// Dimension labels shared by the conversion helpers.
#[derive(Debug, Clone, Copy)]
pub struct Labels<'a> {
    pub countries: &'a [String],
    pub sectors: &'a [String],
    pub years: &'a [i32],
}

impl<'a> Labels<'a> {
    pub fn of(f: &'a Fundamentals) -> Self {
        Self { countries: &f.countries, sectors: &f.sectors, years: &f.periods }
    }

    pub fn country_vec(&self, a: &Array1<f64>) -> Vec<LongRow> {
        self.countries.iter().enumerate().map(|(c, n)| row(n, "", "", None, a[c])).collect()
    }

    pub fn country_year(&self, a: &Array2<f64>) -> Vec<LongRow> {
        let mut out = Vec::new();
        for (c, n) in self.countries.iter().enumerate() {
            for (t, y) in self.years.iter().enumerate() {
                out.push(row(n, "", "", Some(*y), a[[c, t]]));
            }
        }
        out
    }

    pub fn sector_year(&self, country: &str, a: &Array2<f64>) -> Vec<LongRow> {
        let mut out = Vec::new();
        for (j, s) in self.sectors.iter().enumerate() {
            for (t, y) in self.years.iter().enumerate() {
                out.push(row(country, "", s, Some(*y), a[[j, t]]));
            }
        }
        out
    }

    pub fn country_sector_year(&self, a: &Array3<f64>) -> Vec<LongRow> {
        let mut out = Vec::new();
        for (c, n) in self.countries.iter().enumerate() {
            for (j, s) in self.sectors.iter().enumerate() {
                for (t, y) in self.years.iter().enumerate() {
                    out.push(row(n, "", s, Some(*y), a[[c, j, t]]));
                }
            }
        }
        out
    }

    /// `[importer, exporter, sector, t]`.
    pub fn bilateral(&self, a: &Array4<f64>) -> Vec<LongRow> {
        let mut out = Vec::new();
        for (c, n) in self.countries.iter().enumerate() {
            for (i, p) in self.countries.iter().enumerate() {
                for (j, s) in self.sectors.iter().enumerate() {
                    for (t, y) in self.years.iter().enumerate() {
                        out.push(row(n, p, s, Some(*y), a[[c, i, j, t]]));
                    }
                }
            }
        }
        out
    }

    /// `[country, using sector, input sector, t]`.
    pub fn input_output(&self, a: &Array4<f64>) -> Vec<LongRow> {
        let mut out = Vec::new();
        for (c, n) in self.countries.iter().enumerate() {
            for (j, s) in self.sectors.iter().enumerate() {
                for (h, p) in self.sectors.iter().enumerate() {
                    for (t, y) in self.years.iter().enumerate() {
                        out.push(row(n, p, s, Some(*y), a[[c, j, h, t]]));
                    }
                }
            }
        }
        out
    }

    pub fn read_country_vec(&self, tab: &LongTable) -> Result<Array1<f64>> {
        let mut a = Array1::zeros(self.countries.len());
        for (c, n) in self.countries.iter().enumerate() {
            a[c] = tab.get(n, "", "", None)?;
        }
        Ok(a)
    }

    pub fn read_country_year(&self, tab: &LongTable) -> Result<Array2<f64>> {
        let mut a = Array2::zeros((self.countries.len(), self.years.len()));
        for (c, n) in self.countries.iter().enumerate() {
            for (t, y) in self.years.iter().enumerate() {
                a[[c, t]] = tab.get(n, "", "", Some(*y))?;
            }
        }
        Ok(a)
    }

    pub fn read_sector_year(&self, tab: &LongTable, country: &str) -> Result<Array2<f64>> {
        let mut a = Array2::zeros((self.sectors.len(), self.years.len()));
        for (j, s) in self.sectors.iter().enumerate() {
            for (t, y) in self.years.iter().enumerate() {
                a[[j, t]] = tab.get(country, "", s, Some(*y))?;
            }
        }
        Ok(a)
    }

    pub fn read_country_sector_year(&self, tab: &LongTable) -> Result<Array3<f64>> {
        let mut a = Array3::zeros((self.countries.len(), self.sectors.len(), self.years.len()));
        for (c, n) in self.countries.iter().enumerate() {
            for (j, s) in self.sectors.iter().enumerate() {
                for (t, y) in self.years.iter().enumerate() {
                    a[[c, j, t]] = tab.get(n, "", s, Some(*y))?;
                }
            }
        }
        Ok(a)
    }

    pub fn read_bilateral(&self, tab: &LongTable) -> Result<Array4<f64>> {
        let (n, j, t) = (self.countries.len(), self.sectors.len(), self.years.len());
        let mut a = Array4::zeros((n, n, j, t));
        for (c, cn) in self.countries.iter().enumerate() {
            for (i, pn) in self.countries.iter().enumerate() {
                for (k, s) in self.sectors.iter().enumerate() {
                    for (p, y) in self.years.iter().enumerate() {
                        a[[c, i, k, p]] = tab.get(cn, pn, s, Some(*y))?;
                    }
                }
            }
        }
        Ok(a)
    }

    pub fn read_input_output(&self, tab: &LongTable) -> Result<Array4<f64>> {
        let (n, j, t) = (self.countries.len(), self.sectors.len(), self.years.len());
        let mut a = Array4::zeros((n, j, j, t));
        for (c, cn) in self.countries.iter().enumerate() {
            for (u, us) in self.sectors.iter().enumerate() {
                for (h, hs) in self.sectors.iter().enumerate() {
                    for (p, y) in self.years.iter().enumerate() {
                        a[[c, u, h, p]] = tab.get(cn, hs, us, Some(*y))?;
                    }
                }
            }
        }
        Ok(a)
    }
}

/// File names used for a fundamentals directory.
pub const FUNDAMENTAL_FILES: [&str; 13] = [
    "A.csv",
    "d.csv",
    "tau.csv",
    "kappa_io.csv",
    "kappa_k.csv",
    "Omega.csv",
    "zeta.csv",
    "L.csv",
    "delta.csv",
    "phi.csv",
    "gamma.csv",
    "alpha.csv",
    "K0.csv",
];

/// Write fundamentals to `dir`, one long table per array.
pub fn write_fundamentals(dir: &Path, f: &Fundamentals) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.display().to_string(), source: e })?;
    let lab = Labels::of(f);
    let tables: [(&str, Vec<LongRow>); 13] = [
        ("A.csv", lab.country_sector_year(&f.a)),
        ("d.csv", lab.bilateral(&f.d)),
        ("tau.csv", lab.bilateral(&f.tau)),
        ("kappa_io.csv", lab.input_output(&f.kappa_io)),
        ("kappa_k.csv", lab.country_sector_year(&f.kappa_k)),
        ("Omega.csv", lab.country_sector_year(&f.omega_shift)),
        ("zeta.csv", lab.country_year(&f.zeta)),
        ("L.csv", lab.country_year(&f.l)),
        ("delta.csv", lab.country_year(&f.delta)),
        ("phi.csv", lab.country_year(&f.phi)),
        ("gamma.csv", lab.country_sector_year(&f.gamma)),
        ("alpha.csv", lab.country_sector_year(&f.alpha)),
        ("K0.csv", lab.country_vec(&f.k0)),
    ];
    for (name, rows) in tables.iter() {
        write_rows(&dir.join(name), rows)?;
    }
    Ok(())
}

/// Read fundamentals from `dir`. Country, sector and year labels are taken
/// from `A.csv` (and `d.csv` must cover the same labels). Files other than
/// `A.csv`, `d.csv` and `L.csv` may be absent, in which case the defaults of
/// [`Fundamentals::uniform`] apply.
pub fn read_fundamentals(dir: &Path) -> Result<Fundamentals> {
    let a_tab = LongTable::read(&dir.join("A.csv"))?;
    let countries = a_tab.labels(Column::Country);
    let sectors = a_tab.labels(Column::Sector);
    let years = a_tab.years();
    let mut f = Fundamentals::uniform(countries.clone(), sectors.clone(), years.clone());
    let lab = Labels { countries: &countries, sectors: &sectors, years: &years };
    f.a = lab.read_country_sector_year(&a_tab)?;
    f.d = lab.read_bilateral(&LongTable::read(&dir.join("d.csv"))?)?;
    f.l = lab.read_country_year(&LongTable::read(&dir.join("L.csv"))?)?;
    let optional = |name: &str| -> Result<Option<LongTable>> {
        let p = dir.join(name);
        if p.exists() {
            LongTable::read(&p).map(Some)
        } else {
            Ok(None)
        }
    };
    if let Some(t) = optional("tau.csv")? {
        f.tau = lab.read_bilateral(&t)?;
    }
    if let Some(t) = optional("kappa_io.csv")? {
        f.kappa_io = lab.read_input_output(&t)?;
    }
    if let Some(t) = optional("kappa_k.csv")? {
        f.kappa_k = lab.read_country_sector_year(&t)?;
    }
    if let Some(t) = optional("Omega.csv")? {
        f.omega_shift = lab.read_country_sector_year(&t)?;
    }
    if let Some(t) = optional("zeta.csv")? {
        f.zeta = lab.read_country_year(&t)?;
    }
    if let Some(t) = optional("delta.csv")? {
        f.delta = lab.read_country_year(&t)?;
    }
    if let Some(t) = optional("phi.csv")? {
        f.phi = lab.read_country_year(&t)?;
    }
    if let Some(t) = optional("gamma.csv")? {
        f.gamma = lab.read_country_sector_year(&t)?;
    }
    if let Some(t) = optional("alpha.csv")? {
        f.alpha = lab.read_country_sector_year(&t)?;
    }
    if let Some(t) = optional("K0.csv")? {
        f.k0 = lab.read_country_vec(&t)?;
    }
    f.validate()?;
    Ok(f)
}

/// Names of the files written by [`write_equilibria`].
pub const EQUILIBRIUM_FILES: [&str; 13] =
    ["w", "r", "k", "rho", "pk", "e", "c", "eps_bar", "deficit", "p", "omega", "va_share", "pi"];

/// Write a sequence of period equilibria as long tables, one file per
/// variable. `years[i]` labels `eqs[i]`; `None` leaves the year empty (used
/// for a steady state).
pub fn write_equilibria(dir: &Path, countries: &[String], sectors: &[String], years: &[Option<i32>], eqs: &[&PeriodEquilibrium]) -> Result<()> {
    if years.len() != eqs.len() {
        return Err(Error::validation(format!("{} year labels for {} equilibria", years.len(), eqs.len())));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.display().to_string(), source: e })?;
    let row = |c: usize, partner: &str, sector: &str, y: Option<i32>, v: f64| LongRow {
        country: countries[c].clone(),
        partner: partner.to_string(),
        sector: sector.to_string(),
        year: y,
        value: v,
    };
    let country_var = |get: &dyn Fn(&PeriodEquilibrium) -> &Array1<f64>| -> Vec<LongRow> {
        let mut out = Vec::new();
        for c in 0..countries.len() {
            for (y, eq) in years.iter().zip(eqs) {
                out.push(row(c, "", "", *y, get(eq)[c]));
            }
        }
        out
    };
    let sector_var = |get: &dyn Fn(&PeriodEquilibrium) -> &Array2<f64>| -> Vec<LongRow> {
        let mut out = Vec::new();
        for c in 0..countries.len() {
            for (k, s) in sectors.iter().enumerate() {
                for (y, eq) in years.iter().zip(eqs) {
                    out.push(row(c, "", s, *y, get(eq)[[c, k]]));
                }
            }
        }
        out
    };
    let mut pi = Vec::new();
    for c in 0..countries.len() {
        for (i, partner) in countries.iter().enumerate() {
            for (k, s) in sectors.iter().enumerate() {
                for (y, eq) in years.iter().zip(eqs) {
                    pi.push(row(c, partner, s, *y, eq.pi[[c, i, k]]));
                }
            }
        }
    }
    let tables: [(&str, Vec<LongRow>); 13] = [
        ("w", country_var(&|e| &e.w)),
        ("r", country_var(&|e| &e.r)),
        ("k", country_var(&|e| &e.k)),
        ("rho", country_var(&|e| &e.rho)),
        ("pk", country_var(&|e| &e.pk)),
        ("e", country_var(&|e| &e.e)),
        ("c", country_var(&|e| &e.c)),
        ("eps_bar", country_var(&|e| &e.eps_bar)),
        ("deficit", country_var(&|e| &e.deficit)),
        ("p", sector_var(&|e| &e.p)),
        ("omega", sector_var(&|e| &e.omega)),
        ("va_share", sector_var(&|e| &e.va_share)),
        ("pi", pi),
    ];
    for (name, rows) in tables {
        write_rows(&dir.join(format!("{name}.csv")), &rows)?;
    }
    Ok(())
}

/// Group rows by a string key, preserving key order. Used by report writers
/// that need stable output.
pub fn sorted_rows(rows: Vec<LongRow>) -> Vec<LongRow> {
    let mut map: BTreeMap<(String, String, String, Option<i32>), LongRow> = BTreeMap::new();
    for r in rows {
        map.insert((r.country.clone(), r.partner.clone(), r.sector.clone(), r.year), r);
    }
    map.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: &str, k: usize) -> Vec<String> {
        (0..k).map(|i| format!("{p}{i}")).collect()
    }

    #[test]
    fn fundamentals_round_trip_bitwise() {
        let mut f = Fundamentals::uniform(names("c", 2), names("s", 3), vec![2000, 2001]);
        let mut v = 0.1234567890123f64;
        for x in f.a.iter_mut() {
            v = (v * 7.77).fract() + 0.3;
            *x = v / 3.0;
        }
        f.d[[0, 1, 2, 1]] = 1.0 + 1.0 / 3.0;
        f.tau[[1, 0, 0, 0]] = 0.1 + 0.2;
        f.kappa_io[[1, 2, 0, 1]] = 0.2;
        f.kappa_io[[1, 2, 1, 1]] = 0.8 - 1.0 / 3.0;
        f.kappa_io[[1, 2, 2, 1]] = 1.0 - 0.2 - (0.8 - 1.0 / 3.0);
        let dir = tempfile::tempdir().unwrap();
        write_fundamentals(dir.path(), &f).unwrap();
        let g = read_fundamentals(dir.path()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn missing_cell_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "country,partner,sector,year,value\nA,,s,2000,1.5\n").unwrap();
        let t = LongTable::read(&p).unwrap();
        assert_eq!(t.get("A", "", "s", Some(2000)).unwrap(), 1.5);
        assert!(matches!(t.get("A", "", "s", Some(2001)), Err(Error::Data(_))));
    }

    #[test]
    fn rejects_bad_header_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "country,sector,year,value\nA,s,2000,1\n").unwrap();
        assert!(LongTable::read(&p).is_err());
        std::fs::write(&p, "country,partner,sector,year,value\nA,,s,2000,1\nA,,s,2000,2\n").unwrap();
        assert!(matches!(LongTable::read(&p), Err(Error::Data(_))));
    }
}
