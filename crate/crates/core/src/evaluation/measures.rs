use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{l1_norm, quad_form};
use crate::{Error, Result};

/// Conversion of half a squared-percent variance difference into basis points.
pub const BP_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Risk aversion.
    pub gamma: f64,
    /// Proportional transaction cost as a fraction (0.0005 = 5 bp).
    pub tau: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { gamma: 1.0, tau: 0.0 }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("tau must be non-negative, got {}", self.tau)));
        }
        Ok(())
    }

    pub fn tau_bp(&self) -> f64 {
        self.tau * 1e4
    }
}

fn check_aligned(n1: usize, n2: usize, what: &str) -> Result<()> {
    if n1 != n2 {
        return Err(Error::Misaligned(format!("{n1} weight vectors but {n2} {what}")));
    }
    if n1 == 0 {
        return Err(Error::EmptyInput("no days to evaluate".into()));
    }
    Ok(())
}

/// `w_t' S_t w_t` for each day.
pub fn daily_variances(weights: &[DVector<f64>], covs: &[DMatrix<f64>]) -> Result<Vec<f64>> {
    check_aligned(weights.len(), covs.len(), "covariance matrices")?;
    weights
        .iter()
        .zip(covs)
        .map(|(w, s)| {
            if w.len() != s.nrows() {
                return Err(Error::Misaligned(format!("{} weights for a {}x{} matrix", w.len(), s.nrows(), s.ncols())));
            }
            Ok(quad_form(s, w))
        })
        .collect()
}

/// Average realized portfolio variance over all days of the run.
pub fn portfolio_variance(weights: &[DVector<f64>], covs: &[DMatrix<f64>]) -> Result<f64> {
    let v = daily_variances(weights, covs)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Mean of per-period averages weighted by their day counts.
pub fn day_weighted_mean(values: &[(f64, usize)]) -> Result<f64> {
    let days: usize = values.iter().map(|(_, n)| n).sum();
    if days == 0 {
        return Err(Error::EmptyInput("no days to aggregate".into()));
    }
    Ok(values.iter().map(|(v, n)| v * *n as f64).sum::<f64>() / days as f64)
}

/// Certainty-equivalent gain in bp from switching from strategy 1 to 2.
pub fn ceq(pv1: f64, pv2: f64, cfg: &EvalConfig) -> f64 {
    BP_FACTOR * cfg.gamma * 0.5 * (pv1 - pv2)
}

/// Average gross exposure `sum_j |w_j|`.
pub fn turnover(weights: &[DVector<f64>]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::EmptyInput("no days to evaluate".into()));
    }
    Ok(weights.iter().map(l1_norm).sum::<f64>() / weights.len() as f64)
}

/// Round-trip turnover including the drift of positions from open to close:
/// `(1/2T) sum_t sum_j (2 + r_oc) |w|`.
pub fn exact_turnover(weights: &[DVector<f64>], oc_returns: &[DVector<f64>]) -> Result<f64> {
    check_aligned(weights.len(), oc_returns.len(), "open-close return vectors")?;
    let mut total = 0.0;
    for (w, r) in weights.iter().zip(oc_returns) {
        if w.len() != r.len() {
            return Err(Error::Misaligned("open-close returns and weights differ in length".into()));
        }
        total += w.iter().zip(r.iter()).map(|(w, r)| (2.0 + r) * w.abs()).sum::<f64>();
    }
    Ok(total / (2.0 * weights.len() as f64))
}

/// |w|-weighted average daily open-close return across days and assets.
pub fn weighted_average_return(weights: &[DVector<f64>], oc_returns: &[DVector<f64>]) -> Result<f64> {
    check_aligned(weights.len(), oc_returns.len(), "open-close return vectors")?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (w, r) in weights.iter().zip(oc_returns) {
        num += w.iter().zip(r.iter()).map(|(w, r)| w.abs() * r).sum::<f64>();
        den += l1_norm(w);
    }
    Ok(num / den)
}

/// Relative error `(TO - TO_exact) / TO_exact`.
pub fn turnover_error(to: f64, to_exact: f64) -> f64 {
    (to - to_exact) / to_exact
}

/// Relative turnover error implied by an annual |w|-weighted return `p`
/// (daily average `0.004 p`).
pub fn xi_for_annual_return(p: f64) -> f64 {
    -p / (500.0 + p)
}

/// Average cost per day `2 tau TO`, as a fraction.
pub fn transaction_costs(to: f64, cfg: &EvalConfig) -> f64 {
    2.0 * cfg.tau * to
}

/// Net certainty-equivalent gain in bp from switching from 1 to 2.
pub fn nceq(pv1: f64, pv2: f64, to1: f64, to2: f64, cfg: &EvalConfig) -> f64 {
    ceq(pv1, pv2, cfg) + 2.0 * cfg.tau_bp() * (to1 - to2)
}

/// Preference for strategy 2 over strategy 1 as a function of `tau/gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BetcVerdict {
    Always,
    Never,
    /// Preferred while `tau/gamma` (bp) is below the threshold.
    PreferredBelow(f64),
    /// Preferred once `tau/gamma` (bp) exceeds the threshold.
    PreferredAbove(f64),
}

impl BetcVerdict {
    pub fn threshold(&self) -> Option<f64> {
        match self {
            BetcVerdict::PreferredBelow(t) | BetcVerdict::PreferredAbove(t) => Some(*t),
            _ => None,
        }
    }
}

impl fmt::Display for BetcVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetcVerdict::Always => f.write_str("A"),
            BetcVerdict::Never => f.write_str("N"),
            BetcVerdict::PreferredBelow(t) => write!(f, "<{t:.2}"),
            BetcVerdict::PreferredAbove(t) => write!(f, ">{t:.2}"),
        }
    }
}

/// Break-even `tau/gamma` in bp solving `nceq = 0`, with the direction of
/// preference for strategy 2.
pub fn betc(pv1: f64, pv2: f64, to1: f64, to2: f64) -> BetcVerdict {
    let dpv = pv1 - pv2;
    let dto = to1 - to2;
    if dpv >= 0.0 && dto >= 0.0 && (dpv > 0.0 || dto > 0.0) {
        return BetcVerdict::Always;
    }
    if dpv <= 0.0 && dto <= 0.0 {
        return BetcVerdict::Never;
    }
    let threshold = -0.25 * BP_FACTOR * dpv / dto;
    if dpv > 0.0 {
        BetcVerdict::PreferredBelow(threshold)
    } else {
        BetcVerdict::PreferredAbove(threshold)
    }
}
