use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, FixedOffset, NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One trade print.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    /// Exchange-local timestamp carrying its UTC offset (nanosecond precision).
    pub timestamp: DateTime<FixedOffset>,
    pub ticker: String,
    pub price: f64,
}

impl TickRecord {
    pub fn local_date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

/// Trading-hours window in exchange-local time, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Session {
    pub start: NaiveTime,
    pub end: NaiveTime,
}

impl Default for Session {
    fn default() -> Self {
        Self {
            start: NaiveTime::from_hms_opt(9, 30, 0).unwrap(),
            end: NaiveTime::from_hms_opt(16, 0, 0).unwrap(),
        }
    }
}

impl Session {
    pub fn new(start: NaiveTime, end: NaiveTime) -> Result<Self> {
        if end <= start {
            return Err(Error::Config(format!(
                "session end {end} must be after start {start}"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, ts: &DateTime<FixedOffset>) -> bool {
        let t = ts.time();
        t >= self.start && t <= self.end
    }

    pub fn length(&self) -> Duration {
        self.end - self.start
    }
}

/// Trades sorted by `(ticker, timestamp)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickSeries {
    records: Vec<TickRecord>,
}

impl TickSeries {
    /// Sorts the records by `(ticker, timestamp)`; ties keep their input order.
    pub fn from_records(mut records: Vec<TickRecord>) -> Self {
        records.sort_by(|a, b| {
            a.ticker
                .cmp(&b.ticker)
                .then_with(|| a.timestamp.cmp(&b.timestamp))
        });
        Self { records }
    }

    pub fn records(&self) -> &[TickRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TickRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn tickers(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            if out.last() != Some(&r.ticker) {
                out.push(r.ticker.clone());
            }
        }
        out
    }

    /// The contiguous stream of one ticker.
    pub fn stream(&self, ticker: &str) -> &[TickRecord] {
        let lo = self.records.partition_point(|r| r.ticker.as_str() < ticker);
        let hi = self.records.partition_point(|r| r.ticker.as_str() <= ticker);
        &self.records[lo..hi]
    }

    /// Per-ticker, per-local-date slices.
    pub fn by_ticker_day(&self) -> BTreeMap<(String, NaiveDate), &[TickRecord]> {
        let mut out = BTreeMap::new();
        let mut start = 0;
        for i in 1..=self.records.len() {
            let split = i == self.records.len()
                || self.records[i].ticker != self.records[start].ticker
                || self.records[i].local_date() != self.records[start].local_date();
            if split {
                let first = &self.records[start];
                out.insert(
                    (first.ticker.clone(), first.local_date()),
                    &self.records[start..i],
                );
                start = i;
            }
        }
        out
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        let mut d: Vec<NaiveDate> = self.records.iter().map(|r| r.local_date()).collect();
        d.sort();
        d.dedup();
        d
    }
}

/// Reads a `timestamp,ticker,price` CSV and keeps the trades inside `session`.
pub fn load_ticks(path: impl AsRef<Path>, session: &Session) -> Result<TickSeries> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["timestamp", "ticker", "price"] {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `timestamp,ticker,price`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 3 fields, got {}", row.len()),
            });
        }
        let rec = parse_row(&row[0], &row[1], &row[2], line)?;
        if session.contains(&rec.timestamp) {
            records.push(rec);
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no trades inside the session in {}",
            path.display()
        )));
    }
    Ok(TickSeries::from_records(records))
}

fn parse_row(timestamp: &str, ticker: &str, price: &str, line: u64) -> Result<TickRecord> {
    let timestamp = DateTime::parse_from_rfc3339(timestamp.trim()).map_err(|e| Error::Parse {
        line,
        msg: format!("bad timestamp `{timestamp}`: {e}"),
    })?;
    let ticker = ticker.trim().to_string();
    if ticker.is_empty() {
        return Err(Error::Parse {
            line,
            msg: "empty ticker".into(),
        });
    }
    let price: f64 = price.trim().parse().map_err(|e| Error::Parse {
        line,
        msg: format!("bad price `{price}`: {e}"),
    })?;
    if !(price.is_finite() && price > 0.0) {
        return Err(Error::Parse {
            line,
            msg: format!("price must be positive, got {price}"),
        });
    }
    Ok(TickRecord {
        timestamp,
        ticker,
        price,
    })
}

pub fn write_ticks(path: impl AsRef<Path>, ticks: &[TickRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "timestamp,ticker,price")?;
    for t in ticks {
        writeln!(
            w,
            "{},{},{}",
            t.timestamp.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, false),
            t.ticker,
            t.price
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Ticker with its sector label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetMeta {
    pub ticker: String,
    pub sector: String,
}

impl AssetMeta {
    pub fn validate_unique(metas: &[AssetMeta]) -> Result<()> {
        let mut seen = HashSet::new();
        for m in metas {
            if !seen.insert(m.ticker.as_str()) {
                return Err(Error::Metadata(format!("duplicate ticker {}", m.ticker)));
            }
        }
        Ok(())
    }
}
