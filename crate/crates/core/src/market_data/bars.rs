use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarRecord {
    pub date: NaiveDate,
    pub ticker: String,
    pub open: f64,
    pub close: f64,
}

impl BarRecord {
    /// Open-to-close simple return as a fraction.
    pub fn oc_return(&self) -> f64 {
        self.close / self.open - 1.0
    }
}

/// Open-close returns of one day, aligned with the panel's ticker order.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyBarPanel {
    pub date: NaiveDate,
    pub oc_returns: DVector<f64>,
}

/// Reads a `date,ticker,open,close` CSV.
pub fn load_bars(path: impl AsRef<Path>) -> Result<Vec<BarRecord>> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "ticker", "open", "close"] {
        return Err(Error::Parse {
            line: 1,
            msg: "expected header `date,ticker,open,close`".into(),
        });
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<BarRecord>() {
        let rec = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        if !(rec.open > 0.0 && rec.close > 0.0) {
            return Err(Error::Parse {
                line: out.len() as u64 + 2,
                msg: format!("non-positive bar price for {} on {}", rec.ticker, rec.date),
            });
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no bars in {}",
            path.as_ref().display()
        )));
    }
    Ok(out)
}

pub fn write_bars(path: impl AsRef<Path>, bars: &[BarRecord]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "date,ticker,open,close")?;
    for b in bars {
        writeln!(w, "{},{},{:?},{:?}", b.date, b.ticker, b.open, b.close)?;
    }
    w.flush()?;
    Ok(())
}

/// Groups bars into per-day open-close return vectors in `tickers` order.
/// Every listed ticker must have exactly one bar on every day that appears.
pub fn bar_panels(bars: &[BarRecord], tickers: &[String]) -> Result<BTreeMap<NaiveDate, DailyBarPanel>> {
    let index: BTreeMap<&str, usize> = tickers.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut days: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
    for b in bars {
        let Some(&i) = index.get(b.ticker.as_str()) else {
            continue;
        };
        let slot = days.entry(b.date).or_insert_with(|| vec![None; tickers.len()]);
        if slot[i].replace(b.oc_return()).is_some() {
            return Err(Error::Misaligned(format!("duplicate bar for {} on {}", b.ticker, b.date)));
        }
    }
    days.into_iter()
        .map(|(date, vals)| {
            let v: Option<Vec<f64>> = vals.into_iter().collect();
            let v = v.ok_or_else(|| Error::Misaligned(format!("missing bar on {date}")))?;
            Ok((
                date,
                DailyBarPanel {
                    date,
                    oc_returns: DVector::from_vec(v),
                },
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_group() {
        let d = NaiveDate::from_ymd_opt(2015, 1, 2).unwrap();
        let bars = vec![
            BarRecord { date: d, ticker: "B".into(), open: 10.0, close: 10.1 },
            BarRecord { date: d, ticker: "A".into(), open: 20.0, close: 19.0 },
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_bars(f.path(), &bars).unwrap();
        let back = load_bars(f.path()).unwrap();
        assert_eq!(back, bars);
        let panels = bar_panels(&back, &["A".into(), "B".into()]).unwrap();
        let p = &panels[&d];
        assert!((p.oc_returns[0] + 0.05).abs() < 1e-15);
        assert!((p.oc_returns[1] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn missing_asset_is_misaligned() {
        let d = NaiveDate::from_ymd_opt(2015, 1, 2).unwrap();
        let bars = vec![BarRecord { date: d, ticker: "A".into(), open: 1.0, close: 1.0 }];
        assert!(bar_panels(&bars, &["A".into(), "B".into()]).is_err());
    }
}
