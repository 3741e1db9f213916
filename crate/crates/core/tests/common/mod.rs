#![allow(dead_code)]

use minvar::backtest::{generate_synthetic, realized_from_ticks, BacktestConfig, MarketInputs, SyntheticMarket, SyntheticMarketSpec};
use minvar::market_data::bar_panels;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// Random positive definite matrix `A A' + d I` with entries of mixed scale.
pub fn random_pd(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, m, |_, _| normal(rng));
    let scale = 10f64.powf(rng.random_range(-1.0..1.0));
    (&a * a.transpose() + DMatrix::identity(m, m) * rng.random_range(0.01..0.5)) * scale
}

/// Builds a config from TOML body text placed after the generated `[data]` table.
pub fn config(assets: &[String], extra: &str) -> BacktestConfig {
    let quoted: Vec<String> = assets.iter().map(|a| format!("\"{a}\"")).collect();
    let text = format!("{extra}\n[data]\ncovariances = \"unused.csv\"\nassets = [{}]\n", quoted.join(", "));
    BacktestConfig::from_toml_str(&text).unwrap()
}

/// Realized covariances and bars of a synthetic market, computed in memory.
pub fn synthetic_inputs(spec: &SyntheticMarketSpec, cfg: &BacktestConfig) -> (SyntheticMarket, MarketInputs) {
    let market = generate_synthetic(spec).unwrap();
    let (series, clean) = realized_from_ticks(&market.ticks, &market.tickers, &cfg.clean, &cfg.realized).unwrap();
    let mut inputs = MarketInputs::from_series(series);
    inputs.bars = Some(bar_panels(&market.bars, &market.tickers).unwrap());
    inputs.meta = market.meta.clone();
    inputs.clean = Some(clean);
    (market, inputs)
}
