use chrono::{Duration, NaiveDate};
use nalgebra::DMatrix;

use super::{Session, TickRecord};
use crate::{Error, Result};

pub const DEFAULT_BIN_WIDTH_MINUTES: i64 = 15;

/// Returns over equally spaced intraday bins: row `j` is the M-vector of bin `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedReturnPanel {
    pub date: NaiveDate,
    pub tickers: Vec<String>,
    pub returns: DMatrix<f64>,
}

impl BinnedReturnPanel {
    pub fn bins(&self) -> usize {
        self.returns.nrows()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            date: self.date,
            tickers: self.tickers.clone(),
            returns: &self.returns * factor,
        }
    }
}

/// Per-asset log-returns over fixed-width bins covering the session. A bin's
/// return runs from the last price before the bin (or its first trade when
/// none precedes it) to the last price inside it; bins without trades get 0.
/// The last bin may be partial; trades at the session close fall into it.
pub fn bin_returns(
    streams: &[&[TickRecord]],
    tickers: &[String],
    date: NaiveDate,
    session: &Session,
    width: Duration,
) -> Result<BinnedReturnPanel> {
    if streams.len() != tickers.len() {
        return Err(Error::Misaligned(format!(
            "{} streams for {} tickers",
            streams.len(),
            tickers.len()
        )));
    }
    let width_ns = width
        .num_nanoseconds()
        .filter(|w| *w > 0)
        .ok_or_else(|| Error::InvalidParameter("bin width must be positive".into()))?;
    let len_ns = session.length().num_nanoseconds().unwrap();
    let nbins = ((len_ns + width_ns - 1) / width_ns) as usize;
    let mut out = DMatrix::zeros(nbins, streams.len());
    for (col, stream) in streams.iter().enumerate() {
        let mut prev: Option<f64> = None;
        let mut bin_first: Option<f64> = None;
        let mut bin_last: Option<f64> = None;
        let mut cur_bin: Option<usize> = None;
        let flush = |bin: usize, first: f64, last: f64, prev: Option<f64>, out: &mut DMatrix<f64>| {
            let reference = prev.unwrap_or(first);
            out[(bin, col)] = last.ln() - reference.ln();
        };
        for t in stream.iter() {
            if t.local_date() != date || !session.contains(&t.timestamp) {
                continue;
            }
            let offset = (t.timestamp.time() - session.start).num_nanoseconds().unwrap();
            let bin = ((offset / width_ns) as usize).min(nbins - 1);
            if cur_bin != Some(bin) {
                if let (Some(b), Some(f), Some(l)) = (cur_bin, bin_first, bin_last) {
                    flush(b, f, l, prev, &mut out);
                    prev = Some(l);
                }
                cur_bin = Some(bin);
                bin_first = Some(t.price);
            }
            bin_last = Some(t.price);
        }
        if let (Some(b), Some(f), Some(l)) = (cur_bin, bin_first, bin_last) {
            flush(b, f, l, prev, &mut out);
        }
    }
    Ok(BinnedReturnPanel {
        date,
        tickers: tickers.to_vec(),
        returns: out,
    })
}
