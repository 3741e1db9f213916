use chrono::Duration;
use rayon::prelude::*;

use super::config::RealizedConfig;
use crate::market_data::{bin_returns, clean_ticks, intraday_returns, refresh_time_sync, CleanConfig, CleanReport, TickRecord, TickSeries};
use crate::realized::{realized_kernel, CovMatrixSeries};
use crate::Result;

/// Daily realized-kernel covariances from raw ticks: clean, synchronize,
/// bin, scale and apply the kernel, one day at a time in parallel.
pub fn realized_from_ticks(
    ticks: &TickSeries,
    assets: &[String],
    clean: &CleanConfig,
    realized: &RealizedConfig,
) -> Result<(CovMatrixSeries, CleanReport)> {
    let session = clean.session()?;
    let (cleaned, report) = clean_ticks(ticks, clean);
    let by_day = cleaned.by_ticker_day();
    let dates = cleaned.dates();
    let width = Duration::minutes(realized.bin_minutes);
    let empty: &[TickRecord] = &[];
    let matrices = dates
        .par_iter()
        .map(|&date| {
            let streams: Vec<&[TickRecord]> = assets
                .iter()
                .map(|a| by_day.get(&(a.clone(), date)).copied().unwrap_or(empty))
                .collect();
            let day = || -> Result<_> {
                let synced = refresh_time_sync(&streams, assets, date)?;
                let panel = intraday_returns(&synced)?.scaled(realized.return_scale);
                let binned = bin_returns(&streams, assets, date, &session, width)?.scaled(realized.return_scale);
                realized_kernel(&panel, &binned)
            };
            day().map_err(|e| e.context(format!("realized kernel {date}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((CovMatrixSeries::new(assets.to_vec(), matrices)?, report))
}
