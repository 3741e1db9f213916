use nalgebra::{DMatrix, DVector};

use crate::realized::{ensure_invertible, CovarianceMatrix};
use crate::{Error, Result};

fn check_positive(sigma2: &DVector<f64>) -> Result<()> {
    if let Some((i, v)) = sigma2.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain(format!("non-positive variance forecast {v} for asset {i}")));
    }
    Ok(())
}

/// Diagonal covariance forecast with identity correlations.
pub fn vt_forecast(sigma2: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_positive(sigma2)?;
    Ok(DMatrix::from_diagonal(sigma2))
}

/// `D R D` with `D = diag(sqrt(sigma2))`; the diagonal is set to `sigma2` exactly.
pub fn dcc_covariance(r: &DMatrix<f64>, sigma2: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_positive(sigma2)?;
    let m = sigma2.len();
    if r.nrows() != m || r.ncols() != m {
        return Err(Error::Misaligned(format!("{}x{} correlation for {m} variances", r.nrows(), r.ncols())));
    }
    let d: Vec<f64> = sigma2.iter().map(|v| v.sqrt()).collect();
    Ok(DMatrix::from_fn(m, m, |i, j| if i == j { sigma2[i] } else { r[(i, j)] * d[i] * d[j] }))
}

/// Yesterday's realized covariance, ridge-repaired when needed.
pub fn rw_forecast(prev: &CovarianceMatrix, ridge: f64) -> CovarianceMatrix {
    ensure_invertible(prev, ridge)
}

/// Equal weights `1/M`.
pub fn naive_weights(m: usize) -> Result<DVector<f64>> {
    if m == 0 {
        return Err(Error::InvalidParameter("naive weights need at least one asset".into()));
    }
    Ok(DVector::from_element(m, 1.0 / m as f64))
}
