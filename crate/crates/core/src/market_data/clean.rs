use chrono::NaiveTime;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Session, TickRecord, TickSeries};

/// Tick-cleaning rules: non-positive prices are dropped, simultaneous prints
/// are collapsed to their median, and prices further than
/// `mad_k * MAD + mad_floor * median` from the median of the `mad_window`
/// surrounding ticks are discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CleanConfig {
    pub mad_k: f64,
    pub mad_window: usize,
    /// Price-relative slack added to the MAD band so flat stretches
    /// (MAD = 0) do not reject single tick-size moves.
    pub mad_floor: f64,
    #[serde(with = "clock")]
    pub session_start: NaiveTime,
    #[serde(with = "clock")]
    pub session_end: NaiveTime,
}

impl Default for CleanConfig {
    fn default() -> Self {
        let s = Session::default();
        Self {
            mad_k: 10.0,
            mad_window: 50,
            mad_floor: 5e-4,
            session_start: s.start,
            session_end: s.end,
        }
    }
}

impl CleanConfig {
    pub fn session(&self) -> crate::Result<Session> {
        Session::new(self.session_start, self.session_end)
    }
}

mod clock {
    use super::*;

    pub fn serialize<S: Serializer>(t: &NaiveTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.format("%H:%M:%S").to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveTime, D::Error> {
        let raw = String::deserialize(d)?;
        NaiveTime::parse_from_str(&raw, "%H:%M:%S")
            .or_else(|_| NaiveTime::parse_from_str(&raw, "%H:%M"))
            .map_err(serde::de::Error::custom)
    }
}

/// Counters describing what cleaning removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub nonpositive: usize,
    pub collapsed: usize,
    pub outliers: usize,
    /// Ticker-days left without any trade.
    pub emptied_streams: usize,
}

impl CleanReport {
    fn absorb(&mut self, other: &CleanReport) {
        self.nonpositive += other.nonpositive;
        self.collapsed += other.collapsed;
        self.outliers += other.outliers;
        self.emptied_streams += other.emptied_streams;
    }
}

/// Cleans every ticker-day stream independently (in parallel) and iterates
/// the rules to a fixed point, so cleaning a cleaned series is a no-op.
pub fn clean_ticks(ticks: &TickSeries, cfg: &CleanConfig) -> (TickSeries, CleanReport) {
    let groups: Vec<&[TickRecord]> = ticks.by_ticker_day().into_values().collect();
    let cleaned: Vec<(Vec<TickRecord>, CleanReport)> =
        groups.par_iter().map(|g| clean_stream(g, cfg)).collect();
    let mut report = CleanReport::default();
    let mut out = Vec::with_capacity(ticks.len());
    for (recs, rep) in cleaned {
        report.absorb(&rep);
        out.extend(recs);
    }
    if report.emptied_streams > 0 {
        log::warn!("cleaning emptied {} ticker-day streams", report.emptied_streams);
    }
    (TickSeries::from_records(out), report)
}

fn clean_stream(stream: &[TickRecord], cfg: &CleanConfig) -> (Vec<TickRecord>, CleanReport) {
    let mut rep = CleanReport::default();
    let mut cur: Vec<TickRecord> = stream
        .iter()
        .filter(|t| t.price.is_finite() && t.price > 0.0)
        .cloned()
        .collect();
    rep.nonpositive = stream.len() - cur.len();
    loop {
        let before = cur.len();
        cur = collapse_duplicates(cur);
        rep.collapsed += before - cur.len();
        let flagged = mad_outliers(&cur, cfg);
        rep.outliers += flagged.iter().filter(|f| **f).count();
        let changed = cur.len() != before || flagged.iter().any(|f| *f);
        cur = cur
            .into_iter()
            .zip(flagged)
            .filter_map(|(t, f)| (!f).then_some(t))
            .collect();
        if !changed {
            break;
        }
    }
    if cur.is_empty() && !stream.is_empty() {
        rep.emptied_streams = 1;
    }
    (cur, rep)
}

fn collapse_duplicates(stream: Vec<TickRecord>) -> Vec<TickRecord> {
    let mut out: Vec<TickRecord> = Vec::with_capacity(stream.len());
    let mut i = 0;
    while i < stream.len() {
        let mut j = i + 1;
        while j < stream.len() && stream[j].timestamp == stream[i].timestamp {
            j += 1;
        }
        let mut rec = stream[i].clone();
        if j - i > 1 {
            let mut prices: Vec<f64> = stream[i..j].iter().map(|t| t.price).collect();
            rec.price = median(&mut prices);
        }
        out.push(rec);
        i = j;
    }
    out
}

fn mad_outliers(stream: &[TickRecord], cfg: &CleanConfig) -> Vec<bool> {
    let n = stream.len();
    let mut flags = vec![false; n];
    if n < 3 || cfg.mad_window < 2 {
        return flags;
    }
    let w = cfg.mad_window.min(n - 1);
    let mut buf = Vec::with_capacity(w);
    for (i, flag) in flags.iter_mut().enumerate() {
        // w neighbours centred on i (shifted at the edges), i excluded
        let mut lo = i.saturating_sub(w / 2);
        if lo + w + 1 > n {
            lo = n - w - 1;
        }
        buf.clear();
        buf.extend(
            stream[lo..lo + w + 1]
                .iter()
                .enumerate()
                .filter(|(k, _)| lo + k != i)
                .map(|(_, t)| t.price),
        );
        let med = median(&mut buf);
        let mut dev: Vec<f64> = buf.iter().map(|p| (p - med).abs()).collect();
        let mad = median(&mut dev);
        *flag = (stream[i].price - med).abs() > cfg.mad_k * mad + cfg.mad_floor * med;
    }
    flags
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
