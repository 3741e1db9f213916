//! Scalar DCC(1,1) with correlation targeting, fitted by least squares on
//! realized correlation matrices.

use nalgebra::{DMatrix, DVector};

use super::optim::{minimize2, rect_grid, OptimResult};
use crate::{Error, Result};

/// Stationarity margin: `a^2 + b^2 <= 1 - DCC_MARGIN`.
pub const DCC_MARGIN: f64 = 1e-6;
pub const DCC_MIN_OBS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct DccParams {
    pub a: f64,
    pub b: f64,
    pub pbar: DMatrix<f64>,
}

/// Lagged inputs for the next correlation forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct DccState {
    pub prev_r: DMatrix<f64>,
    pub prev_p: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DccFit {
    pub params: DccParams,
    pub objective: f64,
    pub trace: Vec<f64>,
}

/// One step `R_t = (1-a^2-b^2) Pbar + a^2 P_{t-1} + b^2 R_{t-1}` with the
/// diagonal pinned to one.
pub fn dcc_forecast(params: &DccParams, state: &DccState) -> DMatrix<f64> {
    let a2 = params.a * params.a;
    let b2 = params.b * params.b;
    let c = 1.0 - a2 - b2;
    let m = params.pbar.nrows();
    let mut r = DMatrix::from_fn(m, m, |i, j| {
        c * params.pbar[(i, j)] + a2 * state.prev_p[(i, j)] + b2 * state.prev_r[(i, j)]
    });
    for i in 0..m {
        r[(i, i)] = 1.0;
    }
    r
}

/// Off-diagonal upper-triangle entries, the only part the objective sees.
fn upper(p: &DMatrix<f64>) -> DVector<f64> {
    let m = p.nrows();
    DVector::from_iterator(m * (m - 1) / 2, (0..m).flat_map(|i| ((i + 1)..m).map(move |j| p[(i, j)])))
}

/// Sum over t of squared Frobenius distance between `P_t` and the filtered
/// `R_t`, started at `R_0 = Pbar`.
pub fn dcc_objective(a: f64, b: f64, corrs: &[DMatrix<f64>], pbar: &DMatrix<f64>) -> f64 {
    let ps: Vec<DVector<f64>> = corrs.iter().map(upper).collect();
    objective_upper(a, b, &ps, &upper(pbar))
}

fn objective_upper(a: f64, b: f64, ps: &[DVector<f64>], pbar: &DVector<f64>) -> f64 {
    let a2 = a * a;
    let b2 = b * b;
    let c = 1.0 - a2 - b2;
    let mut r = pbar.clone();
    let mut total = 0.0;
    for t in 0..ps.len() {
        if t > 0 {
            for k in 0..r.len() {
                r[k] = c * pbar[k] + a2 * ps[t - 1][k] + b2 * r[k];
            }
        }
        for k in 0..r.len() {
            let d = ps[t][k] - r[k];
            total += d * d;
        }
    }
    // off-diagonal entries appear twice in the full Frobenius norm
    2.0 * total
}

pub fn sample_mean(mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(mats[0].nrows(), mats[0].ncols());
    for p in mats {
        acc += p;
    }
    acc / mats.len() as f64
}

pub fn dcc_feasible(x: [f64; 2]) -> bool {
    x[0] >= 0.0 && x[1] >= 0.0 && x[0] * x[0] + x[1] * x[1] <= 1.0 - DCC_MARGIN
}

/// Least-squares fit of `(a, b)` with `Pbar` set to the sample mean of `corrs`.
pub fn dcc_fit(corrs: &[DMatrix<f64>]) -> Result<DccFit> {
    if corrs.len() < DCC_MIN_OBS {
        return Err(Error::insufficient(
            "DCC fit",
            format!("{} correlation matrices, need {DCC_MIN_OBS}", corrs.len()),
        ));
    }
    let m = corrs[0].nrows();
    if corrs.iter().any(|p| p.nrows() != m || p.ncols() != m) {
        return Err(Error::Misaligned("correlation matrices of different sizes".into()));
    }
    let mut pbar = sample_mean(corrs);
    for i in 0..m {
        pbar[(i, i)] = 1.0;
    }
    if m < 2 {
        return Ok(DccFit {
            params: DccParams { a: 0.0, b: 0.0, pbar },
            objective: 0.0,
            trace: vec![0.0],
        });
    }
    let ps: Vec<DVector<f64>> = corrs.iter().map(upper).collect();
    let pu = upper(&pbar);
    let f = |x: [f64; 2]| objective_upper(x[0], x[1], &ps, &pu);
    let grid: Vec<[f64; 2]> = rect_grid([0.0, 0.0], [1.0, 1.0], 11).into_iter().filter(|x| dcc_feasible(*x)).collect();
    let scale = ps.iter().map(|p| p.norm_squared()).sum::<f64>().max(f64::MIN_POSITIVE);
    let OptimResult { x, value, trace, .. } = minimize2(&f, &dcc_feasible, &grid, 0.05, 1e-12 * scale)?;
    Ok(DccFit {
        params: DccParams { a: x[0], b: x[1], pbar },
        objective: value,
        trace,
    })
}
