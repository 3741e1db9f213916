use chrono::NaiveDate;
use nalgebra::DVector;

use super::CovarianceMatrix;
use crate::linalg::{ones, solve_symmetric};
use crate::{Error, Result};

/// Minimum-variance weights `S^-1 i / (i' S^-1 i)` of a realized covariance.
pub fn realized_weights(s: &CovarianceMatrix) -> Result<DVector<f64>> {
    let m = s.dim();
    let x = solve_symmetric(&s.values, &ones(m))
        .ok_or_else(|| Error::Singular(format!("realized covariance on {}", s.date)))?;
    let denom = x.sum();
    if !(denom.abs() > f64::EPSILON * x.amax()) || !denom.is_finite() {
        return Err(Error::Singular(format!(
            "i'S^-1 i = {denom:e} on {}",
            s.date
        )));
    }
    Ok(x / denom)
}

/// Quadratic-utility weights `S^-1 r / gamma`; these are not normalized.
pub fn realized_weights_quadutil(s: &CovarianceMatrix, r: &DVector<f64>, gamma: f64) -> Result<DVector<f64>> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("risk aversion must be positive, got {gamma}")));
    }
    if r.len() != s.dim() {
        return Err(Error::Misaligned(format!("{} returns for {} assets", r.len(), s.dim())));
    }
    let x = solve_symmetric(&s.values, r)
        .ok_or_else(|| Error::Singular(format!("realized covariance on {}", s.date)))?;
    Ok(x / gamma)
}

/// Dated realized weight vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealizedWeightSeries {
    pub dates: Vec<NaiveDate>,
    pub weights: Vec<DVector<f64>>,
}

impl RealizedWeightSeries {
    /// Computes realized weights for every matrix of a series.
    pub fn from_covariances(series: &[CovarianceMatrix]) -> Result<Self> {
        use rayon::prelude::*;
        let weights = series
            .par_iter()
            .map(realized_weights)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dates: series.iter().map(|s| s.date).collect(),
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
