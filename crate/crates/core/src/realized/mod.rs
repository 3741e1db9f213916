//! Daily realized measures: Parzen realized-kernel covariances, realized
//! correlations and realized minimum-variance weights.

mod io;
mod kernel;
mod matrix;
mod weights;

pub use io::{load_cov_series, write_cov_series, write_cov_series_to};
pub use kernel::{autocov_gamma, bandwidth, parzen_weight, realized_kernel, realized_kernel_with_bandwidth, BandwidthResult};
pub use matrix::{ensure_invertible, realized_correlation, CovMatrixSeries, CovarianceMatrix, RepairInfo, DEFAULT_RIDGE};
pub use weights::{realized_weights, realized_weights_quadutil, RealizedWeightSeries};
