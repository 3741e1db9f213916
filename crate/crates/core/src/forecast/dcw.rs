//! Diagonal dynamic conditional weights: an ARMA(1,1)-type recursion on
//! realized minimum-variance weights with weight targeting.

use nalgebra::DVector;
use rayon::prelude::*;

use super::optim::{minimize2, rect_grid};
use crate::{Error, Result};

/// Stationarity margin: `|b| <= 1 - DCW_MARGIN`.
pub const DCW_MARGIN: f64 = 1e-6;
pub const DCW_MIN_OBS: usize = 100;
/// Coordinate sums closer to zero than this cannot be normalized.
pub const NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DcwParams {
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub omega_bar: DVector<f64>,
    pub omega0: DVector<f64>,
}

impl DcwParams {
    /// Per-asset persistence `a_i + b_i`.
    pub fn persistence(&self) -> DVector<f64> {
        &self.a + &self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcwFit {
    pub params: DcwParams,
    pub objectives: Vec<f64>,
    pub traces: Vec<Vec<f64>>,
}

/// One recursion step, before and after normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct DcwStep {
    pub raw: DVector<f64>,
    pub normalized: DVector<f64>,
    pub divisor: f64,
}

pub fn dcw_feasible(x: [f64; 2]) -> bool {
    x[0].is_finite() && x[1].abs() <= 1.0 - DCW_MARGIN
}

/// Conditional sum of squares of one asset's recursion started at `omega_bar`.
pub fn dcw_objective(a: f64, b: f64, nu: &[f64], omega_bar: f64) -> f64 {
    let c = (1.0 - a - b) * omega_bar;
    let mut w = omega_bar;
    let mut total = 0.0;
    for t in 0..nu.len() {
        if t > 0 {
            w = c + a * nu[t - 1] + b * w;
        }
        let d = nu[t] - w;
        total += d * d;
    }
    total
}

/// Equation-by-equation least squares; `weights[t]` is the realized weight
/// vector of day t.
pub fn dcw_fit(weights: &[DVector<f64>]) -> Result<DcwFit> {
    if weights.len() < DCW_MIN_OBS {
        return Err(Error::insufficient(
            "DCW fit",
            format!("{} weight vectors, need {DCW_MIN_OBS}", weights.len()),
        ));
    }
    let m = weights[0].len();
    if weights.iter().any(|w| w.len() != m) {
        return Err(Error::Misaligned("weight vectors of different lengths".into()));
    }
    let t = weights.len() as f64;
    let mut omega_bar = DVector::zeros(m);
    for w in weights {
        omega_bar += w;
    }
    omega_bar /= t;
    let grid: Vec<[f64; 2]> = rect_grid([-0.5, -0.95], [1.5, 0.95], 21);
    let fits = (0..m)
        .into_par_iter()
        .map(|i| {
            let nu: Vec<f64> = weights.iter().map(|w| w[i]).collect();
            let wb = omega_bar[i];
            let f = |x: [f64; 2]| dcw_objective(x[0], x[1], &nu, wb);
            let scale = nu.iter().map(|v| (v - wb) * (v - wb)).sum::<f64>() + wb * wb * f64::EPSILON;
            // rounding in the sample mean leaves a residual of about n * (n eps |nu|)^2
            let n = t;
            let big = nu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let noise = n * (n * f64::EPSILON * big).powi(2);
            minimize2(&f, &dcw_feasible, &grid, 0.05, 1e-12 * scale + noise).map_err(|e| e.context(format!("DCW asset {i}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let a = DVector::from_iterator(m, fits.iter().map(|f| f.x[0]));
    let b = DVector::from_iterator(m, fits.iter().map(|f| f.x[1]));
    Ok(DcwFit {
        params: DcwParams {
            a,
            b,
            omega0: omega_bar.clone(),
            omega_bar,
        },
        objectives: fits.iter().map(|f| f.value).collect(),
        traces: fits.into_iter().map(|f| f.trace).collect(),
    })
}

/// Unnormalized recursion `w_t = (1 - a - b) wbar + a nu_{t-1} + b w_{t-1}` per asset.
pub fn dcw_raw(params: &DcwParams, prev_nu: &DVector<f64>, prev_omega: &DVector<f64>) -> Result<DVector<f64>> {
    let m = params.omega_bar.len();
    if prev_nu.len() != m || prev_omega.len() != m {
        return Err(Error::Misaligned(format!("DCW state has wrong dimension, expected {m}")));
    }
    Ok(DVector::from_fn(m, |i, _| {
        let (a, b) = (params.a[i], params.b[i]);
        (1.0 - a - b) * params.omega_bar[i] + a * prev_nu[i] + b * prev_omega[i]
    }))
}

/// One recursion step divided by its coordinate sum.
pub fn dcw_forecast(params: &DcwParams, prev_nu: &DVector<f64>, prev_omega: &DVector<f64>) -> Result<DcwStep> {
    let raw = dcw_raw(params, prev_nu, prev_omega)?;
    let divisor = raw.sum();
    if !(divisor.abs() > NORMALIZATION_TOL) {
        return Err(Error::DegenerateNormalization(divisor));
    }
    Ok(DcwStep {
        normalized: &raw / divisor,
        raw,
        divisor,
    })
}
