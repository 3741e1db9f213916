//! Minimum-variance portfolio research pipeline built on high-frequency data.
//!
//! The crate turns tick data into daily realized-kernel covariance matrices and
//! realized optimal weights, fits and forecasts five allocation strategies
//! (Naive, VT, DCC, RW, DCW), allocates under gross-exposure constraints and
//! evaluates the resulting portfolios out of sample.
//!
//! Module map:
//!
//! * [`market_data`]: tick ingestion, cleaning, refresh-time synchronization, binning.
//! * [`realized`]: Parzen realized kernel, correlations, realized weights.
//! * [`forecast`]: HAR, scalar DCC, diagonal DCW, random walk and naive forecasts.
//! * [`allocation`]: closed-form and exposure-constrained minimum variance.
//! * [`evaluation`]: PV, CEQ, TO, BETC, R², utility envelopes, sector shares.
//! * [`backtest`]: configuration, synthetic markets, rolling backtest, reports.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod backtest;
pub mod error;
pub mod evaluation;
pub mod forecast;
pub mod linalg;
pub mod market_data;
pub mod realized;

pub use error::{Error, Result};
