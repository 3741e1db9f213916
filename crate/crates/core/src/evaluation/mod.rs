//! Out-of-sample performance measures: portfolio variance, certainty
//! equivalents, turnover, break-even transaction costs, R², utility
//! envelopes and sector shares.
//!
//! Covariances are in squared percent, so CEQ, NCEQ and BETC convert to
//! basis points with a factor of 100.

mod envelope;
mod measures;
mod r2;
mod sectors;

pub use envelope::{envelope_grid, utility_envelope, Breakpoint, Envelope, EnvelopeLine, EnvelopePoint};
pub use measures::{
    betc, ceq, daily_variances, day_weighted_mean, exact_turnover, nceq, portfolio_variance, transaction_costs,
    turnover, turnover_error, weighted_average_return, xi_for_annual_return, BetcVerdict, EvalConfig, BP_FACTOR,
};
pub use r2::{histogram, is_r2, oos_r2, r2_against_mean, Histogram};
pub use sectors::{sector_importance, SectorShares};
