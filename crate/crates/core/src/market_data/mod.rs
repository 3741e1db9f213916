//! Tick ingestion, cleaning, refresh-time synchronization and binning.
//!
//! Everything downstream works on per-day panels: a [`ReturnPanel`] of
//! synchronized intraday log-returns, a [`BinnedReturnPanel`] of 15-minute
//! returns used by the bandwidth rule, and open-close returns from
//! [`DailyBarPanel`] for the exact turnover measure.

mod bars;
mod bins;
mod clean;
mod sync;
mod ticks;

pub use bars::{bar_panels, load_bars, write_bars, BarRecord, DailyBarPanel};
pub use bins::{bin_returns, BinnedReturnPanel, DEFAULT_BIN_WIDTH_MINUTES};
pub use clean::{clean_ticks, CleanConfig, CleanReport};
pub use sync::{intraday_returns, refresh_time_sync, ReturnPanel, SyncedPrices};
pub use ticks::{load_ticks, write_ticks, AssetMeta, Session, TickRecord, TickSeries};
