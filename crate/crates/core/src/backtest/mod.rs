//! Config-driven rolling backtest: data loading, in-sample fits,
//! one-step-ahead forecasts, constrained allocation, evaluation and report
//! emission, plus a synthetic market generator for offline runs.

mod config;
mod pipeline;
mod realize;
mod report;
mod synthetic;

pub use config::{
    BacktestConfig, DataConfig, DcwConfig, DcwFeedback, RealizedConfig, Switch, WindowConfig, WindowUnit,
};
pub use pipeline::{make_windows, run_backtest, BacktestOutput, MarketInputs, WeightPath, Window};
pub use realize::realized_from_ticks;
pub use report::{
    emit_reports, reemit_reports, render_tables, CellMetrics, Diagnostics, Manifest, ManifestEntry,
    PerformanceReport, R2Entry, StrategyEnvelope, StrategySectors, SwitchMetrics, WindowSummary,
};
pub use synthetic::{business_days, generate_synthetic, write_synthetic, SyntheticMarket, SyntheticMarketSpec};

use std::path::Path;

use crate::Result;

/// Runs a backtest and writes its reports and persisted series to `out`.
pub fn run_and_emit(cfg: &BacktestConfig, inputs: &MarketInputs, out: impl AsRef<Path>) -> Result<BacktestOutput> {
    let output = run_backtest(cfg, inputs)?;
    emit_reports(&output.report, out, &cfg.hash(), &output.artifacts)?;
    Ok(output)
}
