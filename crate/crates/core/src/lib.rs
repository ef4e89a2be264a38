//! Equilibrium engine for a multi-country, three-sector dynamic Ricardian
//! trade model with nonhomothetic CES demand, capital accumulation and
//! input-output linkages.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: single-equation evaluators and the per-period equilibrium type;
//! * [`static_eq`]: the within-period nested fixed point;
//! * [`steady_state`]: the stationary equilibrium under terminal fundamentals;
//! * [`transition`]: perfect-foresight transition paths;
//! * [`twocountry`]: the analytical two-country model;
//! * [`calibration`]: inversion of observed data into fundamentals;
//! * [`scenario`]: tariff counterfactuals, welfare and reports.

pub mod calibration;
pub mod config;
pub mod error;
pub mod fundamentals;
pub mod io;
pub mod model;
pub mod num;
pub mod scenario;
pub mod static_eq;
pub mod steady_state;
pub mod synthetic;
pub mod transition;
pub mod twocountry;

pub use config::{ModelConfig, PreferenceFamily};
pub use error::{Error, Result};
pub use fundamentals::{Fundamentals, PeriodFundamentals};
pub use model::PeriodEquilibrium;
