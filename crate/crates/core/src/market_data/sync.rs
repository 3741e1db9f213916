use chrono::{DateTime, FixedOffset, NaiveDate};
use nalgebra::DMatrix;

use super::TickRecord;
use crate::{Error, Result};

/// Prices sampled at the refresh-time synchronization points.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncedPrices {
    pub date: NaiveDate,
    pub tickers: Vec<String>,
    /// Strictly increasing sync instants, one per price row.
    pub times: Vec<DateTime<FixedOffset>>,
    /// `(J + 1) x M` matrix of last-trade prices.
    pub prices: DMatrix<f64>,
}

/// Synchronized intraday log-returns of one day: row `j` is the M-vector `r_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub date: NaiveDate,
    pub tickers: Vec<String>,
    pub returns: DMatrix<f64>,
}

impl ReturnPanel {
    pub fn new(date: NaiveDate, tickers: Vec<String>, returns: DMatrix<f64>) -> Result<Self> {
        if returns.nrows() == 0 {
            return Err(Error::insufficient("return panel", "J must be at least 1"));
        }
        if returns.ncols() != tickers.len() {
            return Err(Error::Misaligned(format!(
                "{} return columns for {} tickers",
                returns.ncols(),
                tickers.len()
            )));
        }
        if returns.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite intraday return".into()));
        }
        Ok(Self {
            date,
            tickers,
            returns,
        })
    }

    /// Number of intraday returns `J`.
    pub fn j(&self) -> usize {
        self.returns.nrows()
    }

    pub fn m(&self) -> usize {
        self.returns.ncols()
    }

    /// Same panel with every return multiplied by `factor` (e.g. 100 for percent).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            date: self.date,
            tickers: self.tickers.clone(),
            returns: &self.returns * factor,
        }
    }
}

/// Refresh-time synchronization: the j-th sync point is the first instant at
/// which every asset has traded at least once since point j-1, and each asset
/// contributes its last trade price at or before that instant.
///
/// `streams[i]` must be sorted by time and belongs to `tickers[i]`.
pub fn refresh_time_sync(
    streams: &[&[TickRecord]],
    tickers: &[String],
    date: NaiveDate,
) -> Result<SyncedPrices> {
    if streams.len() != tickers.len() || streams.is_empty() {
        return Err(Error::Misaligned(format!(
            "{} streams for {} tickers",
            streams.len(),
            tickers.len()
        )));
    }
    for (s, t) in streams.iter().zip(tickers) {
        if s.len() < 2 {
            return Err(Error::insufficient(
                format!("refresh-time sync on {date}"),
                format!("asset {t} has {} trade(s), need at least 2", s.len()),
            ));
        }
    }
    let m = streams.len();
    let mut next = vec![0usize; m];
    let mut times = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    while next.iter().zip(streams).all(|(&k, s)| k < s.len()) {
        let tau = next
            .iter()
            .zip(streams)
            .map(|(&k, s)| s[k].timestamp)
            .max()
            .unwrap();
        for (k, s) in next.iter_mut().zip(streams) {
            while *k < s.len() && s[*k].timestamp <= tau {
                *k += 1;
            }
            rows.push(s[*k - 1].price);
        }
        times.push(tau);
    }
    if times.len() < 2 {
        let exhausted = next
            .iter()
            .zip(streams)
            .position(|(&k, s)| k >= s.len())
            .map(|i| tickers[i].clone())
            .unwrap_or_default();
        return Err(Error::insufficient(
            format!("refresh-time sync on {date}"),
            format!("only {} sync point(s); asset {exhausted} stopped trading", times.len()),
        ));
    }
    let prices = DMatrix::from_row_slice(times.len(), m, &rows);
    Ok(SyncedPrices {
        date,
        tickers: tickers.to_vec(),
        times,
        prices,
    })
}

/// Elementwise log-price differences of consecutive sync rows.
pub fn intraday_returns(prices: &SyncedPrices) -> Result<ReturnPanel> {
    let p = &prices.prices;
    if p.nrows() < 2 {
        return Err(Error::insufficient("intraday returns", "need at least 2 price rows"));
    }
    if p.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!(
            "non-positive synchronized price on {}",
            prices.date
        )));
    }
    let logp = p.map(f64::ln);
    let j = p.nrows() - 1;
    let returns = DMatrix::from_fn(j, p.ncols(), |r, c| logp[(r + 1, c)] - logp[(r, c)]);
    ReturnPanel::new(prices.date, prices.tickers.clone(), returns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;
    use proptest::prelude::*;

    fn t0() -> DateTime<FixedOffset> {
        DateTime::parse_from_rfc3339("2015-03-02T10:00:00-05:00").unwrap()
    }

    fn ticks(ticker: &str, pts: &[(i64, f64)]) -> Vec<TickRecord> {
        pts.iter()
            .map(|(s, p)| TickRecord {
                timestamp: t0() + Duration::seconds(*s),
                ticker: ticker.into(),
                price: *p,
            })
            .collect()
    }

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 3, 2).unwrap()
    }

    #[test]
    fn single_asset_syncs_on_its_own_trades() {
        let a = ticks("A", &[(1, 10.0), (5, 11.0), (9, 12.0)]);
        let s = refresh_time_sync(&[&a], &["A".into()], day()).unwrap();
        let secs: Vec<i64> = s.times.iter().map(|t| (*t - t0()).num_seconds()).collect();
        assert_eq!(secs, vec![1, 5, 9]);
        assert_eq!(s.prices.column(0).as_slice(), &[10.0, 11.0, 12.0]);
    }

    #[test]
    fn two_asset_hand_simulation() {
        let a = ticks("A", &[(1, 1.0), (2, 2.0), (3, 3.0)]);
        let b = ticks("B", &[(2, 20.0), (4, 40.0)]);
        let s = refresh_time_sync(&[&a, &b], &["A".into(), "B".into()], day()).unwrap();
        let secs: Vec<i64> = s.times.iter().map(|t| (*t - t0()).num_seconds()).collect();
        assert_eq!(secs, vec![2, 4]);
        assert_eq!(s.prices.row(0).iter().cloned().collect::<Vec<_>>(), vec![2.0, 20.0]);
        // A's last trade before 4 is at 3
        assert_eq!(s.prices.row(1).iter().cloned().collect::<Vec<_>>(), vec![3.0, 40.0]);
    }

    #[test]
    fn one_trade_asset_is_rejected() {
        let a = ticks("A", &[(1, 1.0), (2, 2.0)]);
        let b = ticks("B", &[(2, 20.0)]);
        let err = refresh_time_sync(&[&a, &b], &["A".into(), "B".into()], day()).unwrap_err();
        assert!(err.to_string().contains("asset B"));
    }

    #[test]
    fn log_return_values() {
        let a = ticks("A", &[(1, 100.0), (2, 101.0)]);
        let s = refresh_time_sync(&[&a], &["A".into()], day()).unwrap();
        let r = intraday_returns(&s).unwrap();
        assert_eq!(r.j(), 1);
        assert!((r.returns[(0, 0)] - 1.01f64.ln()).abs() < 1e-15);
        assert!((r.returns[(0, 0)] - 0.00995).abs() < 1e-5);

        let c = ticks("A", &[(1, 50.0), (2, 50.0), (3, 50.0)]);
        let s = refresh_time_sync(&[&c], &["A".into()], day()).unwrap();
        assert!(intraday_returns(&s).unwrap().returns.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn nonpositive_price_is_domain_error() {
        let s = SyncedPrices {
            date: day(),
            tickers: vec!["A".into()],
            times: vec![t0(), t0() + Duration::seconds(1)],
            prices: DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        };
        assert!(matches!(intraday_returns(&s), Err(Error::Domain(_))));
    }

    fn arb_stream() -> impl Strategy<Value = Vec<(i64, f64)>> {
        proptest::collection::btree_map(0i64..500, 1.0f64..200.0, 2..40)
            .prop_map(|m| m.into_iter().collect())
    }

    proptest! {
        #[test]
        fn sync_prices_replay_last_trade(a in arb_stream(), b in arb_stream(), c in arb_stream()) {
            let streams = [ticks("A", &a), ticks("B", &b), ticks("C", &c)];
            let refs: Vec<&[TickRecord]> = streams.iter().map(|s| s.as_slice()).collect();
            let names: Vec<String> = vec!["A".into(), "B".into(), "C".into()];
            if let Ok(s) = refresh_time_sync(&refs, &names, day()) {
                for w in s.times.windows(2) {
                    prop_assert!(w[0] < w[1]);
                }
                for (row, tau) in s.times.iter().enumerate() {
                    for (col, st) in streams.iter().enumerate() {
                        let last = st.iter().rfind(|t| t.timestamp <= *tau).unwrap();
                        prop_assert_eq!(s.prices[(row, col)], last.price);
                    }
                }
            }
        }

        #[test]
        fn single_asset_returns_sum_to_total_log_return(a in arb_stream()) {
            let st = ticks("A", &a);
            let s = refresh_time_sync(&[&st], &["A".into()], day()).unwrap();
            let r = intraday_returns(&s).unwrap();
            let total = (st.last().unwrap().price / st[0].price).ln();
            let sum: f64 = r.returns.iter().sum();
            prop_assert!((sum - total).abs() < 1e-12);
            // exp-cumsum reconstructs the log-prices
            let mut lp = st[0].price.ln();
            for (j, v) in r.returns.iter().enumerate() {
                lp += v;
                prop_assert!((lp - s.prices[(j + 1, 0)].ln()).abs() < 1e-12);
            }
        }
    }
}
