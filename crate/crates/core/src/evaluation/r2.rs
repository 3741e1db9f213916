use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-asset `1 - sum (nu - w)^2 / sum (nu - mean(nu))^2`, where the mean is
/// taken over the same sample. `None` marks assets whose realized weights
/// do not vary.
pub fn r2_against_mean(forecasts: &[DVector<f64>], realized: &[DVector<f64>]) -> Result<Vec<Option<f64>>> {
    if forecasts.len() != realized.len() {
        return Err(Error::Misaligned(format!(
            "{} forecasts for {} realized weight vectors",
            forecasts.len(),
            realized.len()
        )));
    }
    if realized.is_empty() {
        return Err(Error::EmptyInput("no days for R²".into()));
    }
    let m = realized[0].len();
    let n = realized.len() as f64;
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mean = realized.iter().map(|r| r[i]).sum::<f64>() / n;
        let mse_n: f64 = realized.iter().map(|r| (r[i] - mean).powi(2)).sum();
        let mse_a: f64 = forecasts.iter().zip(realized).map(|(f, r)| (r[i] - f[i]).powi(2)).sum();
        let tiny = f64::EPSILON * f64::EPSILON * n * mean.abs().max(1.0).powi(2);
        out.push((mse_n > tiny).then(|| 1.0 - mse_a / mse_n));
    }
    Ok(out)
}

/// Out-of-sample R² against the ex-post mean of the realized weights.
pub fn oos_r2(forecasts: &[DVector<f64>], realized: &[DVector<f64>]) -> Result<Vec<Option<f64>>> {
    r2_against_mean(forecasts, realized)
}

/// In-sample R² of fitted values against the realized series they were fitted to.
pub fn is_r2(fitted: &[DVector<f64>], realized: &[DVector<f64>]) -> Result<Vec<Option<f64>>> {
    r2_against_mean(fitted, realized)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width histogram on `[lo, hi]`; values outside are clamped into the
/// end bins.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
    let bins = bins.max(1);
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|k| lo + width * k as f64).collect();
    let mut counts = vec![0; bins];
    for v in values.iter().filter(|v| v.is_finite()) {
        let k = ((v - lo) / width).floor();
        let k = if k < 0.0 { 0 } else { (k as usize).min(bins - 1) };
        counts[k] += 1;
    }
    Histogram { edges, counts }
}
