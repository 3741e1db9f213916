//! One-step-ahead forecasts for the five allocation strategies.
//!
//! Covariance-based strategies (VT, DCC, RW) produce a forecast matrix that is
//! handed to the allocator; weight-based strategies (Naive, DCW) produce the
//! weights directly. Every forecast function takes lagged state only.

mod dcc;
mod dcw;
mod har;
pub mod optim;
mod params;
mod simple;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use dcc::{dcc_feasible, dcc_fit, dcc_forecast, dcc_objective, sample_mean, DccFit, DccParams, DccState, DCC_MARGIN};
pub use dcw::{dcw_feasible, dcw_fit, dcw_forecast, dcw_raw, dcw_objective, DcwFit, DcwParams, DcwStep, DCW_MARGIN};
pub use har::{har_fit, har_fit_asset, har_forecast, har_predict, HarForecast, HarParams, HAR_LAGS, VARIANCE_FLOOR};
pub use params::ModelParams;
pub use simple::{dcc_covariance, naive_weights, rw_forecast, vt_forecast};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    Naive,
    #[serde(rename = "VT")]
    Vt,
    #[serde(rename = "DCC")]
    Dcc,
    #[serde(rename = "RW")]
    Rw,
    #[serde(rename = "DCW")]
    Dcw,
}

impl Strategy {
    /// Table order used in reports.
    pub const ALL: [Strategy; 5] = [Strategy::Naive, Strategy::Vt, Strategy::Dcc, Strategy::Rw, Strategy::Dcw];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Naive => "Naive",
            Strategy::Vt => "VT",
            Strategy::Dcc => "DCC",
            Strategy::Rw => "RW",
            Strategy::Dcw => "DCW",
        }
    }

    /// Whether the strategy forecasts a covariance matrix rather than weights.
    pub fn is_covariance_based(self) -> bool {
        matches!(self, Strategy::Vt | Strategy::Dcc | Strategy::Rw)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceForecast {
    pub date: NaiveDate,
    pub strategy: Strategy,
    pub omega: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightForecast {
    pub date: NaiveDate,
    pub strategy: Strategy,
    pub weights: DVector<f64>,
    /// Coordinate sum the raw recursion output was divided by, if any.
    pub divisor: Option<f64>,
}
