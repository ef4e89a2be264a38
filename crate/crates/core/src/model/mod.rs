//! Domain types and single-equation evaluators of the quantitative model.
//! Nothing in this module iterates to a fixed point except the scalar
//! consumption solve.

pub mod accounting;
pub mod capital;
pub mod demand;
pub mod production;

use ndarray::{Array1, Array2, Array3};

pub use accounting::{
    gross_output, portfolio_deficit, portfolio_transfer, spending_rhs, tariff_revenue, trade_deficit,
    value_added_shares,
};
pub use capital::{investment_requirement, next_capital, Investment};
pub use demand::{expenditure, expenditure_shares, newton_consumption, NewtonSettings, Preferences};
pub use production::{
    capital_good_price, composite_cost_shares, input_bundle_cost, intermediate_price_index,
    sectoral_price_index, trade_shares,
};

/// All endogenous objects of one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodEquilibrium {
    pub w: Array1<f64>,
    pub r: Array1<f64>,
    /// Predetermined capital used in the period.
    pub k: Array1<f64>,
    /// Saving rate (nominal investment over national income).
    pub rho: Array1<f64>,
    pub c_tilde: Array2<f64>,
    pub xi: Array2<f64>,
    pub p: Array2<f64>,
    pub pk: Array1<f64>,
    /// Trade shares `[importer, exporter, sector]`.
    pub pi: Array3<f64>,
    /// Intermediate cost shares `[country, using sector, input sector]`.
    pub g_io: Array3<f64>,
    pub g_k: Array2<f64>,
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub t_tariff: Array1<f64>,
    pub tp: f64,
    pub ni: Array1<f64>,
    pub e: Array1<f64>,
    /// Nominal investment `P^K I`.
    pub inv_value: Array1<f64>,
    pub c: Array1<f64>,
    pub omega: Array2<f64>,
    pub eps_bar: Array1<f64>,
    pub va_share: Array2<f64>,
    pub deficit: Array1<f64>,
}

impl PeriodEquilibrium {
    /// Real investment quantity `I = P^K I / P^K`.
    pub fn investment(&self) -> Array1<f64> {
        &self.inv_value / &self.pk
    }

    /// Real consumption per capita `C / L`.
    pub fn consumption_per_capita(&self, l: &Array1<f64>) -> Array1<f64> {
        &self.c / l
    }
}
