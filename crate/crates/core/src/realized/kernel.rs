use nalgebra::DMatrix;

use super::CovarianceMatrix;
use crate::linalg::symmetrize;
use crate::market_data::{BinnedReturnPanel, ReturnPanel};
use crate::{Error, Result};

/// Parzen kernel, evaluated at |x|.
pub fn parzen_weight(x: f64) -> f64 {
    let x = x.abs();
    if x <= 0.5 {
        1.0 - 6.0 * x * x + 6.0 * x * x * x
    } else if x <= 1.0 {
        2.0 * (1.0 - x).powi(3)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthResult {
    pub h: f64,
    pub l: usize,
}

impl BandwidthResult {
    /// Builds a bandwidth with the lag bound clamped to `j - 1`.
    pub fn new(h: f64, j: usize) -> Self {
        let l = if h.is_finite() { (h.floor() as usize).min(j.saturating_sub(1)) } else { j.saturating_sub(1) };
        Self { h, l }
    }
}

/// Cross-asset average of the per-asset bandwidths
/// `3.51 J^0.6 ((2J)^-1 sum r^2 / sum rb^2)^0.4`, where `rb` are binned returns.
pub fn bandwidth(panel: &ReturnPanel, binned: &BinnedReturnPanel) -> Result<BandwidthResult> {
    let m = panel.m();
    if binned.returns.ncols() != m {
        return Err(Error::Misaligned(format!(
            "return panel has {m} assets, binned panel {}",
            binned.returns.ncols()
        )));
    }
    let j = panel.j() as f64;
    let mut total = 0.0;
    for i in 0..m {
        let noise: f64 = panel.returns.column(i).iter().map(|r| r * r).sum::<f64>() / (2.0 * j);
        let signal: f64 = binned.returns.column(i).iter().map(|r| r * r).sum();
        if !(signal > 0.0) {
            return Err(Error::DegenerateVariance(panel.tickers[i].clone()));
        }
        total += 3.51 * j.powf(0.6) * (noise / signal).powf(0.4);
    }
    Ok(BandwidthResult::new(total / m as f64, panel.j()))
}

/// Realized autocovariance at lag `h`; negative lags return the transpose.
pub fn autocov_gamma(panel: &ReturnPanel, h: i64) -> Result<DMatrix<f64>> {
    let jn = panel.j();
    if h.unsigned_abs() as usize >= jn {
        return Err(Error::LagOutOfRange { lag: h, j: jn });
    }
    let lag = h.unsigned_abs() as usize;
    let r = &panel.returns;
    let m = panel.m();
    let mut g = DMatrix::zeros(m, m);
    // rows of `r` are the intraday vectors r_1..r_J
    let lead = r.rows(lag, jn - lag);
    let lagged = r.rows(0, jn - lag);
    g.gemm_tr(1.0, &lead, &lagged, 0.0);
    // gemm_tr computes lead' * lagged, i.e. sum_j r_j r_{j-h}'
    if h < 0 {
        g.transpose_mut();
    }
    Ok(g)
}

/// Realized kernel covariance with the data-driven bandwidth.
pub fn realized_kernel(panel: &ReturnPanel, binned: &BinnedReturnPanel) -> Result<CovarianceMatrix> {
    let bw = bandwidth(panel, binned)?;
    realized_kernel_with_bandwidth(panel, bw)
}

/// Realized kernel `sum_{h=-l}^{l} k(h/H) Gamma_h` for a given bandwidth.
pub fn realized_kernel_with_bandwidth(panel: &ReturnPanel, bw: BandwidthResult) -> Result<CovarianceMatrix> {
    if panel.j() < 2 {
        return Err(Error::insufficient(
            "realized kernel",
            format!("J = {} on {}, need at least 2", panel.j(), panel.date),
        ));
    }
    let mut s = autocov_gamma(panel, 0)?;
    let l = bw.l.min(panel.j() - 1);
    for h in 1..=l {
        let w = if bw.h > 0.0 { parzen_weight(h as f64 / bw.h) } else { 0.0 };
        if w == 0.0 {
            continue;
        }
        let g = autocov_gamma(panel, h as i64)?;
        s += (&g + g.transpose()) * w;
    }
    symmetrize(&mut s);
    Ok(CovarianceMatrix::new(panel.date, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn panel(cols: &[&[f64]]) -> ReturnPanel {
        let j = cols[0].len();
        let m = cols.len();
        let data = DMatrix::from_fn(j, m, |r, c| cols[c][r]);
        let tickers = (0..m).map(|i| format!("X{i}")).collect();
        ReturnPanel::new(NaiveDate::from_ymd_opt(2015, 1, 2).unwrap(), tickers, data).unwrap()
    }

    fn binned(cols: &[&[f64]]) -> BinnedReturnPanel {
        let p = panel(cols);
        BinnedReturnPanel {
            date: p.date,
            tickers: p.tickers,
            returns: p.returns,
        }
    }

    #[test]
    fn parzen_values() {
        assert_eq!(parzen_weight(0.0), 1.0);
        assert!((parzen_weight(0.5) - 0.25).abs() < 1e-15);
        assert!((2.0 * (0.5f64).powi(3) - 0.25).abs() < 1e-15);
        assert_eq!(parzen_weight(1.0), 0.0);
        assert_eq!(parzen_weight(-0.3), parzen_weight(0.3));
        assert_eq!(parzen_weight(1.7), 0.0);
    }

    #[test]
    fn zero_intraday_returns_give_zero_bandwidth() {
        let p = panel(&[&[0.0; 10]]);
        let b = binned(&[&[0.1, -0.2]]);
        assert_eq!(bandwidth(&p, &b).unwrap(), BandwidthResult { h: 0.0, l: 0 });
    }

    #[test]
    fn bandwidth_unit_noise_ratio() {
        // sum r^2 = 200 with J = 100 gives (2J)^-1 sum r^2 = 1
        let r = vec![2f64.sqrt(); 100];
        let p = panel(&[&r]);
        let b = binned(&[&[1.0]]);
        let bw = bandwidth(&p, &b).unwrap();
        let expect = 3.51 * 100f64.powf(0.6);
        assert!((bw.h - expect).abs() < 1e-9);
        assert!((bw.h - 55.63).abs() < 0.01);
        assert_eq!(bw.l, 55);
    }

    #[test]
    fn bandwidth_clamps_lag() {
        let p = panel(&[&[1.0, -1.0, 1.0]]);
        let b = binned(&[&[1e-6]]);
        let bw = bandwidth(&p, &b).unwrap();
        assert!(bw.h > 2.0);
        assert_eq!(bw.l, 2);
    }

    #[test]
    fn degenerate_binned_variance_names_asset() {
        let p = panel(&[&[1.0, 1.0], &[1.0, 2.0]]);
        let b = binned(&[&[1.0], &[0.0]]);
        match bandwidth(&p, &b) {
            Err(Error::DegenerateVariance(t)) => assert_eq!(t, "X1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gamma_examples() {
        let p = panel(&[&[1.0, 2.0, 3.0]]);
        assert_eq!(autocov_gamma(&p, 1).unwrap()[(0, 0)], 8.0);
        assert_eq!(autocov_gamma(&p, -1).unwrap()[(0, 0)], 8.0);
        assert_eq!(autocov_gamma(&p, 0).unwrap()[(0, 0)], 14.0);
        assert!(matches!(autocov_gamma(&p, 3), Err(Error::LagOutOfRange { lag: 3, j: 3 })));
        assert!(autocov_gamma(&p, -3).is_err());
    }

    #[test]
    fn gamma_negative_lag_is_transpose() {
        let p = panel(&[&[1.0, -2.0, 0.5, 0.3], &[0.2, 0.1, -0.7, 1.1]]);
        let g = autocov_gamma(&p, 1).unwrap();
        let gn = autocov_gamma(&p, -1).unwrap();
        assert_eq!(gn, g.transpose());
        // entry (a, b) = sum_j r_{j,a} r_{j-1,b}
        let expect = -2.0 * 0.2 + 0.5 * 0.1 + 0.3 * (-0.7);
        assert!((g[(0, 1)] - expect).abs() < 1e-15);
    }

    #[test]
    fn kernel_lag_zero_and_small_example() {
        let p = panel(&[&[0.01, -0.02, 0.01]]);
        let s0 = realized_kernel_with_bandwidth(&p, BandwidthResult { h: 0.0, l: 0 }).unwrap();
        assert!((s0.values[(0, 0)] - 0.0006).abs() < 1e-18);
        let s = realized_kernel_with_bandwidth(&p, BandwidthResult::new(1.5, 3)).unwrap();
        let g1 = 0.01 * -0.02 + -0.02 * 0.01;
        let k = {
            let x: f64 = 1.0 / 1.5;
            2.0 * (1.0 - x).powi(3)
        };
        let expect = 0.0006 + 2.0 * k * g1;
        assert!((s.values[(0, 0)] - expect).abs() < 1e-18);
    }

    #[test]
    fn kernel_needs_two_returns() {
        let p = panel(&[&[0.01]]);
        assert!(realized_kernel_with_bandwidth(&p, BandwidthResult { h: 0.0, l: 0 }).is_err());
    }
}
