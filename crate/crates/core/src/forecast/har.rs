//! Heterogeneous autoregressive (HAR) model for daily realized variances.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::{Error, Result};

/// Lags consumed before the first regression row.
pub const HAR_LAGS: usize = 22;
const MIN_ROWS: usize = 10;
/// Floor for variance forecasts that come out non-positive.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Per-asset coefficients `[alpha0, daily, weekly, monthly]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarParams {
    pub alphas: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarForecast {
    pub sigma2: DVector<f64>,
    /// Number of assets whose forecast was floored.
    pub floored: usize,
}

fn regressors(history: &[f64]) -> [f64; 4] {
    let n = history.len();
    let mean = |k: usize| history[n - k..].iter().sum::<f64>() / k as f64;
    [1.0, history[n - 1], mean(5), mean(HAR_LAGS)]
}

/// Ordinary least squares of one variance series on its HAR regressors.
pub fn har_fit_asset(series: &[f64]) -> Result<[f64; 4]> {
    if series.len() <= HAR_LAGS + MIN_ROWS {
        return Err(Error::insufficient(
            "HAR fit",
            format!("{} observations, need more than {}", series.len(), HAR_LAGS + MIN_ROWS),
        ));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite variance in HAR input".into()));
    }
    let rows = series.len() - HAR_LAGS;
    let x = DMatrix::from_fn(rows, 4, |r, c| regressors(&series[..HAR_LAGS + r])[c]);
    let y = DVector::from_iterator(rows, series[HAR_LAGS..].iter().copied());
    // scale columns so the rank test does not depend on the variance units
    let norms: Vec<f64> = (0..4).map(|c| x.column(c).norm()).collect();
    if norms.contains(&0.0) {
        return Err(Error::Fit("HAR regressor is identically zero".into()));
    }
    let xs = DMatrix::from_fn(rows, 4, |r, c| x[(r, c)] / norms[c]);
    let svd = xs.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-9 * smax) {
        return Err(Error::Fit(format!(
            "collinear HAR regressors (singular value ratio {:e})",
            smin / smax
        )));
    }
    let beta = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::Fit(format!("HAR least squares failed: {e}")))?;
    let mut out = [0.0; 4];
    for c in 0..4 {
        out[c] = beta[c] / norms[c];
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite HAR coefficients".into()));
    }
    Ok(out)
}

/// Fits one HAR regression per asset; `series[i]` is asset i's variance path.
pub fn har_fit(series: &[Vec<f64>]) -> Result<HarParams> {
    let alphas = series
        .par_iter()
        .enumerate()
        .map(|(i, s)| har_fit_asset(s).map_err(|e| e.context(format!("asset {i}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(HarParams { alphas })
}

/// Raw one-step forecast from at least 22 lags (most recent last).
pub fn har_predict(alpha: &[f64; 4], history: &[f64]) -> f64 {
    let r = regressors(history);
    alpha.iter().zip(r).map(|(a, x)| a * x).sum()
}

/// One-step variance forecasts; `histories[i]` holds asset i's past
/// variances ending at t-1. Non-positive forecasts are floored.
pub fn har_forecast(params: &HarParams, histories: &[&[f64]]) -> Result<HarForecast> {
    if histories.len() != params.alphas.len() {
        return Err(Error::Misaligned(format!(
            "{} histories for {} HAR equations",
            histories.len(),
            params.alphas.len()
        )));
    }
    let mut floored = 0;
    let mut sigma2 = DVector::zeros(histories.len());
    for (i, (alpha, h)) in params.alphas.iter().zip(histories).enumerate() {
        if h.len() < HAR_LAGS {
            return Err(Error::insufficient("HAR forecast", format!("{} lags, need {HAR_LAGS}", h.len())));
        }
        let v = har_predict(alpha, h);
        sigma2[i] = if v >= VARIANCE_FLOOR {
            v
        } else {
            floored += 1;
            VARIANCE_FLOOR
        };
    }
    Ok(HarForecast { sigma2, floored })
}
