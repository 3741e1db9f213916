use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::linalg::{eigen_extremes, symmetrize};
use crate::{Error, Result};

/// Relative ridge used by [`ensure_invertible`] unless configured otherwise.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Condition number above which a matrix is treated as numerically singular.
const MAX_CONDITION: f64 = 1e12;

/// Eigenvalue diagnostics and the ridge applied to a repaired matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepairInfo {
    pub min_eig: f64,
    pub max_eig: f64,
    /// Absolute amount added to the diagonal; zero when only flagged.
    pub ridge: f64,
}

/// A dated symmetric covariance (or correlation) matrix in squared percent units.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub date: NaiveDate,
    pub values: DMatrix<f64>,
    pub psd: bool,
    pub repair: Option<RepairInfo>,
}

impl CovarianceMatrix {
    /// Wraps `values`, checking the spectrum. A matrix whose smallest
    /// eigenvalue falls below `-1e-10 * max` is flagged non-psd and carries
    /// the eigenvalue diagnostics in `repair` with a zero ridge.
    pub fn new(date: NaiveDate, values: DMatrix<f64>) -> Self {
        let (min_eig, max_eig) = eigen_extremes(&values);
        let psd = min_eig >= -1e-10 * max_eig.abs().max(f64::MIN_POSITIVE);
        let repair = (!psd).then_some(RepairInfo {
            min_eig,
            max_eig,
            ridge: 0.0,
        });
        Self {
            date,
            values,
            psd,
            repair,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_repaired(&self) -> bool {
        self.repair.is_some_and(|r| r.ridge > 0.0)
    }
}

/// Adds `ridge * trace / M` to the diagonal when `s` is not positive definite
/// or is badly conditioned; otherwise returns it untouched.
pub fn ensure_invertible(s: &CovarianceMatrix, ridge: f64) -> CovarianceMatrix {
    let (min_eig, max_eig) = eigen_extremes(&s.values);
    let bad = min_eig <= 0.0 || max_eig / min_eig > MAX_CONDITION || !min_eig.is_finite();
    if !bad {
        return s.clone();
    }
    let m = s.dim();
    let trace = s.values.trace();
    // a zero or negative trace gives no usable scale, fall back to the spectrum
    let scale = if trace > 0.0 { trace / m as f64 } else { max_eig.abs().max(1.0) };
    let mut shift = ridge * scale;
    if min_eig + shift <= 0.0 {
        shift = -min_eig + ridge * scale;
    }
    let mut values = s.values.clone();
    for i in 0..m {
        values[(i, i)] += shift;
    }
    let (new_min, new_max) = eigen_extremes(&values);
    CovarianceMatrix {
        date: s.date,
        values,
        psd: new_min >= 0.0,
        repair: Some(RepairInfo {
            min_eig: new_min,
            max_eig: new_max,
            ridge: shift,
        }),
    }
}

/// `D^-1 S D^-1` with `D = diag(sqrt(S_ii))`; the diagonal is set to exactly one.
pub fn realized_correlation(s: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    let m = s.dim();
    let mut d = Vec::with_capacity(m);
    for i in 0..m {
        let v = s.values[(i, i)];
        if !(v > 0.0) {
            return Err(Error::Domain(format!(
                "non-positive variance {v} for asset {i} on {}",
                s.date
            )));
        }
        d.push(v.sqrt());
    }
    let mut p = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { s.values[(i, j)] / (d[i] * d[j]) });
    symmetrize(&mut p);
    Ok(CovarianceMatrix::new(s.date, p))
}

/// Dated sequence of covariance matrices sharing one asset ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrixSeries {
    assets: Vec<String>,
    matrices: Vec<CovarianceMatrix>,
}

impl CovMatrixSeries {
    pub fn new(assets: Vec<String>, matrices: Vec<CovarianceMatrix>) -> Result<Self> {
        let m = assets.len();
        if m == 0 {
            return Err(Error::EmptyInput("covariance series without assets".into()));
        }
        for (k, s) in matrices.iter().enumerate() {
            if s.values.nrows() != m || s.values.ncols() != m {
                return Err(Error::Misaligned(format!(
                    "matrix on {} is {}x{}, expected {m}x{m}",
                    s.date,
                    s.values.nrows(),
                    s.values.ncols()
                )));
            }
            if k > 0 && matrices[k - 1].date >= s.date {
                return Err(Error::Misaligned(format!(
                    "dates not strictly increasing at {}",
                    s.date
                )));
            }
        }
        Ok(Self { assets, matrices })
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn matrices(&self) -> &[CovarianceMatrix] {
        &self.matrices
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.assets.len()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.matrices.iter().map(|s| s.date).collect()
    }

    pub fn get(&self, idx: usize) -> &CovarianceMatrix {
        &self.matrices[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 1, 2).unwrap()
    }

    #[test]
    fn identity_untouched() {
        let s = CovarianceMatrix::new(day(), DMatrix::identity(3, 3));
        let r = ensure_invertible(&s, DEFAULT_RIDGE);
        assert_eq!(r, s);
        assert!(r.repair.is_none());
    }

    #[test]
    fn rank_one_shift() {
        let v = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let s = CovarianceMatrix::new(day(), &v * v.transpose());
        let r = ensure_invertible(&s, 1e-6);
        let expected = 1e-6 * 6.0 / 3.0;
        let (lo, _) = eigen_extremes(&r.values);
        assert!(lo > 0.0);
        assert!((lo - expected).abs() < 1e-12);
        assert!((r.repair.unwrap().ridge - expected).abs() < 1e-20);
    }

    #[test]
    fn correlation_example() {
        let s = CovarianceMatrix::new(day(), DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 4.0]));
        let p = realized_correlation(&s).unwrap();
        assert_eq!(p.values[(0, 0)], 1.0);
        assert_eq!(p.values[(1, 1)], 1.0);
        assert!((p.values[(0, 1)] - 0.25).abs() < 1e-15);
        let bad = CovarianceMatrix::new(day(), DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]));
        assert!(matches!(realized_correlation(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn diagonal_correlation_is_identity() {
        let s = CovarianceMatrix::new(day(), DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 0.1])));
        assert_eq!(realized_correlation(&s).unwrap().values, DMatrix::identity(3, 3));
    }

    #[test]
    fn indefinite_flagged() {
        let s = CovarianceMatrix::new(day(), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(!s.psd);
        assert!(s.repair.is_some());
        let r = ensure_invertible(&s, DEFAULT_RIDGE);
        assert!(r.is_repaired());
        assert!(r.repair.unwrap().min_eig > 0.0);
    }

    #[test]
    fn series_rejects_unsorted_dates() {
        let a = CovarianceMatrix::new(day(), DMatrix::identity(2, 2));
        assert!(CovMatrixSeries::new(vec!["A".into(), "B".into()], vec![a.clone(), a]).is_err());
    }
}
