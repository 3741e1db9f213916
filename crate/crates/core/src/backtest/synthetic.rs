//! Synthetic tick markets driven by a known DCC-type covariance process, so
//! every strategy has a pseudo-true benchmark.

use std::path::Path;

use chrono::{Datelike, Duration, FixedOffset, NaiveDate, NaiveTime, TimeZone, Weekday};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::market_data::{write_bars, write_ticks, AssetMeta, BarRecord, TickRecord, TickSeries};
use crate::realized::{realized_weights, write_cov_series, CovMatrixSeries, CovarianceMatrix};
use crate::{Error, Result};

const SECTOR_NAMES: [&str; 4] = ["Technology", "Financials", "Energy", "Health Care"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticMarketSpec {
    pub assets: usize,
    /// Number of business days to simulate.
    pub days: usize,
    /// Trades per asset per session, besides the opening print.
    pub intraday_points: usize,
    pub start_date: NaiveDate,
    pub utc_offset_hours: i32,
    pub session_start: NaiveTime,
    pub session_end: NaiveTime,
    /// DCC innovation loading on yesterday's standardized returns.
    pub dcc_a: f64,
    /// DCC persistence.
    pub dcc_b: f64,
    /// Common pairwise correlation of the targeting matrix.
    pub correlation: f64,
    /// Long-run daily variances (squared percent) of the first and last
    /// asset; the others are spaced geometrically in between.
    pub variance_low: f64,
    pub variance_high: f64,
    /// AR(1) coefficient of log-variances.
    pub variance_phi: f64,
    /// Standard deviation of log-variance innovations.
    pub variance_vol: f64,
    /// Standard deviation of multiplicative microstructure noise on ticks.
    pub noise_scale: f64,
    /// Expected open-to-close simple return per day (fraction).
    pub drift: f64,
    pub start_price: f64,
    pub seed: u64,
}

impl Default for SyntheticMarketSpec {
    fn default() -> Self {
        Self {
            assets: 5,
            days: 252,
            intraday_points: 78,
            start_date: NaiveDate::from_ymd_opt(2005, 1, 3).unwrap(),
            utc_offset_hours: -5,
            session_start: NaiveTime::from_hms_opt(9, 30, 0).unwrap(),
            session_end: NaiveTime::from_hms_opt(16, 0, 0).unwrap(),
            dcc_a: 0.05,
            dcc_b: 0.93,
            correlation: 0.4,
            variance_low: 1.0,
            variance_high: 4.0,
            variance_phi: 0.97,
            variance_vol: 0.15,
            noise_scale: 0.0,
            drift: 0.0,
            start_price: 100.0,
            seed: 0,
        }
    }
}

impl SyntheticMarketSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.assets == 0 || self.days == 0 || self.intraday_points < 2 {
            return bad("assets, days must be positive and intraday_points at least 2".into());
        }
        if self.session_end <= self.session_start {
            return bad("session_end must follow session_start".into());
        }
        if self.dcc_a < 0.0 || self.dcc_b < 0.0 || self.dcc_a + self.dcc_b >= 1.0 {
            return bad(format!("DCC parameters ({}, {}) are not stationary", self.dcc_a, self.dcc_b));
        }
        if self.variance_phi.abs() >= 1.0 {
            return bad(format!("log-variance AR coefficient {} is not stationary", self.variance_phi));
        }
        let floor = if self.assets > 1 { -1.0 / (self.assets as f64 - 1.0) } else { -1.0 };
        if !(self.correlation > floor && self.correlation < 1.0) {
            return bad(format!("correlation {} does not give a positive definite target", self.correlation));
        }
        if !(self.variance_low > 0.0 && self.variance_high > 0.0) || self.variance_vol < 0.0 || self.noise_scale < 0.0 {
            return bad("variances must be positive and noise levels non-negative".into());
        }
        if !(self.start_price > 0.0) || !(self.drift > -1.0) {
            return bad("start_price must be positive and drift above -1".into());
        }
        Ok(())
    }

    pub fn tickers(&self) -> Vec<String> {
        (0..self.assets).map(|i| format!("S{:02}", i + 1)).collect()
    }

    fn long_run_variance(&self, i: usize) -> f64 {
        if self.assets == 1 {
            return self.variance_low;
        }
        let x = i as f64 / (self.assets - 1) as f64;
        self.variance_low * (self.variance_high / self.variance_low).powf(x)
    }
}

/// Simulated data together with the generating covariances.
#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub tickers: Vec<String>,
    pub meta: Vec<AssetMeta>,
    pub ticks: TickSeries,
    pub bars: Vec<BarRecord>,
    /// Daily covariance of log-returns, squared percent.
    pub true_cov: CovMatrixSeries,
    pub true_weights: Vec<DVector<f64>>,
}

/// Business days (Monday to Friday) starting at `start`.
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn to_correlation(q: &DMatrix<f64>) -> DMatrix<f64> {
    let m = q.nrows();
    DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { q[(i, j)] / (q[(i, i)] * q[(j, j)]).sqrt() })
}

pub fn generate_synthetic(spec: &SyntheticMarketSpec) -> Result<SyntheticMarket> {
    spec.validate()?;
    let m = spec.assets;
    let tickers = spec.tickers();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let offset = FixedOffset::east_opt(spec.utc_offset_hours * 3600)
        .ok_or_else(|| Error::InvalidParameter(format!("bad UTC offset {}", spec.utc_offset_hours)))?;
    let session_ms = (spec.session_end - spec.session_start).num_milliseconds();
    let step_ms = session_ms as f64 / spec.intraday_points as f64;

    let pbar = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { spec.correlation });
    let long_run: Vec<f64> = (0..m).map(|i| spec.long_run_variance(i)).collect();
    let mut log_h: Vec<f64> = long_run.iter().map(|v| v.ln()).collect();
    let mut q = pbar.clone();
    let mut z_prev = DVector::<f64>::zeros(m);
    let mut first = true;
    let mut prices: Vec<f64> = vec![spec.start_price; m];

    let dates = business_days(spec.start_date, spec.days);
    let mut ticks = Vec::new();
    let mut bars = Vec::with_capacity(spec.days * m);
    let mut covs = Vec::with_capacity(spec.days);
    let mut true_weights = Vec::with_capacity(spec.days);

    for &date in &dates {
        if !first {
            q = (1.0 - spec.dcc_a - spec.dcc_b) * &pbar + spec.dcc_a * (&z_prev * z_prev.transpose()) + spec.dcc_b * &q;
            for i in 0..m {
                log_h[i] = long_run[i].ln() + spec.variance_phi * (log_h[i] - long_run[i].ln()) + spec.variance_vol * normal(&mut rng);
            }
        }
        first = false;
        let r = to_correlation(&q);
        let sd: Vec<f64> = log_h.iter().map(|l| (0.5 * l).exp()).collect();
        let sigma = DMatrix::from_fn(m, m, |i, j| r[(i, j)] * sd[i] * sd[j]);
        let cov = CovarianceMatrix::new(date, sigma.clone());
        true_weights.push(realized_weights(&cov)?);
        covs.push(cov);

        // tick times in milliseconds after the open, per asset
        let mut times: Vec<Vec<i64>> = Vec::with_capacity(m);
        for _ in 0..m {
            let mut t = vec![0i64];
            for k in 1..=spec.intraday_points {
                let u: f64 = rng.random_range(0.0..0.5);
                t.push(((k as f64 - u) * step_ms).round() as i64);
            }
            t.dedup();
            times.push(t);
        }
        let mut grid: Vec<i64> = times.iter().flatten().copied().chain([0, session_ms]).collect();
        grid.sort_unstable();
        grid.dedup();

        // latent log-price path on the union grid, in fractional units
        let frac = &sigma / 1e4;
        let chol = frac
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Domain(format!("generator covariance not positive definite on {date}")))?;
        let l = chol.l();
        let drift: Vec<f64> = (0..m).map(|i| (1.0 + spec.drift).ln() - 0.5 * frac[(i, i)]).collect();
        let open: Vec<f64> = prices.iter().map(|p| p.ln()).collect();
        let mut x = DVector::from_vec(open.clone());
        let mut path = Vec::with_capacity(grid.len());
        path.push(x.clone());
        for w in grid.windows(2) {
            let dt = (w[1] - w[0]) as f64 / session_ms as f64;
            let e = DVector::from_fn(m, |_, _| normal(&mut rng));
            let inc = &l * e * dt.sqrt();
            for i in 0..m {
                x[i] += inc[i] + drift[i] * dt;
            }
            path.push(x.clone());
        }
        let close = path.last().unwrap().clone();
        for i in 0..m {
            let move_i = close[i] - open[i] - drift[i];
            z_prev[i] = move_i / frac[(i, i)].sqrt();
        }

        let base = offset
            .from_local_datetime(&date.and_time(spec.session_start))
            .single()
            .ok_or_else(|| Error::InvalidParameter(format!("ambiguous session start on {date}")))?;
        for (i, t) in times.iter().enumerate() {
            for &ms in t {
                let idx = grid.binary_search(&ms).unwrap();
                let noise = if spec.noise_scale > 0.0 { spec.noise_scale * normal(&mut rng) } else { 0.0 };
                ticks.push(TickRecord {
                    timestamp: base + Duration::milliseconds(ms),
                    ticker: tickers[i].clone(),
                    price: (path[idx][i] + noise).exp(),
                });
            }
        }
        for i in 0..m {
            let close_price = close[i].exp();
            bars.push(BarRecord {
                date,
                ticker: tickers[i].clone(),
                open: prices[i],
                close: close_price,
            });
            prices[i] = close_price;
        }
    }

    let meta = tickers
        .iter()
        .enumerate()
        .map(|(i, t)| AssetMeta {
            ticker: t.clone(),
            sector: SECTOR_NAMES[i % SECTOR_NAMES.len()].to_string(),
        })
        .collect();
    Ok(SyntheticMarket {
        true_cov: CovMatrixSeries::new(tickers.clone(), covs)?,
        tickers,
        meta,
        ticks: TickSeries::from_records(ticks),
        bars,
        true_weights,
    })
}

/// Writes `ticks.csv`, `bars.csv`, `true_cov.csv`, `true_weights.csv`,
/// `sectors.csv` and a ready-to-run `backtest.toml` into `dir`.
pub fn write_synthetic(market: &SyntheticMarket, dir: impl AsRef<Path>) -> Result<()> {
    use std::io::Write;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_ticks(dir.join("ticks.csv"), market.ticks.records())?;
    write_bars(dir.join("bars.csv"), &market.bars)?;
    write_cov_series(dir.join("true_cov.csv"), &market.true_cov)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("true_weights.csv"))?);
    writeln!(w, "date,asset,weight")?;
    for (s, nu) in market.true_cov.matrices().iter().zip(&market.true_weights) {
        for (t, v) in market.tickers.iter().zip(nu.iter()) {
            writeln!(w, "{},{},{:?}", s.date, t, v)?;
        }
    }
    w.flush()?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("sectors.csv"))?);
    writeln!(w, "ticker,sector")?;
    for m in &market.meta {
        writeln!(w, "{},{}", m.ticker, m.sector)?;
    }
    w.flush()?;
    let quoted: Vec<String> = market.tickers.iter().map(|t| format!("\"{t}\"")).collect();
    let sectors: Vec<String> = market.meta.iter().map(|m| format!("{} = \"{}\"", m.ticker, m.sector)).collect();
    let toml = format!(
        "output = \"results\"\n\n[data]\nticks = \"ticks.csv\"\nbars = \"bars.csv\"\nassets = [{}]\nsectors = {{ {} }}\n",
        quoted.join(", "),
        sectors.join(", ")
    );
    std::fs::write(dir.join("backtest.toml"), toml)?;
    Ok(())
}
