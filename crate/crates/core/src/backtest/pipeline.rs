//! Rolling in-sample fits, one-step-ahead forecast folds, allocation and
//! evaluation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::config::{BacktestConfig, DcwFeedback, WindowConfig, WindowUnit};
use super::realize::realized_from_ticks;
use super::report::{
    CellMetrics, Diagnostics, PerformanceReport, R2Entry, StrategyEnvelope, StrategySectors, SwitchMetrics,
    WindowSummary,
};
use crate::allocation::{
    constrained_min_variance_warm, min_variance, project_to_constraint, ActiveSet, ExposureConstraint,
};
use crate::evaluation::{
    betc, ceq, day_weighted_mean, envelope_grid, exact_turnover, is_r2, nceq, oos_r2, portfolio_variance,
    sector_importance, turnover, utility_envelope, EnvelopeLine,
};
use crate::forecast::{
    dcc_covariance, dcc_fit, dcc_forecast, dcw_fit, dcw_forecast, dcw_raw, har_fit, har_forecast, naive_weights,
    rw_forecast, vt_forecast, DccParams, DccState, DcwParams, HarParams, ModelParams, Strategy, HAR_LAGS,
};
use crate::market_data::{bar_panels, load_bars, load_ticks, AssetMeta, CleanReport, DailyBarPanel};
use crate::realized::{
    ensure_invertible, load_cov_series, realized_correlation, realized_weights, write_cov_series_to, CovMatrixSeries,
};
use crate::{Error, Result};

/// Fewest in-sample days the HAR regression accepts.
const HAR_MIN_DAYS: usize = HAR_LAGS + 11;
/// Fewest in-sample days the DCC and DCW fits accept.
const DYNAMIC_MIN_DAYS: usize = 100;

/// Everything the backtest reads from disk.
#[derive(Debug, Clone)]
pub struct MarketInputs {
    pub series: CovMatrixSeries,
    pub bars: Option<BTreeMap<NaiveDate, DailyBarPanel>>,
    pub meta: Vec<AssetMeta>,
    pub clean: Option<CleanReport>,
    /// True when the covariances were computed from ticks in this run.
    pub from_ticks: bool,
}

impl MarketInputs {
    /// Loads covariances from `from_cov`, else from `data.covariances`, else
    /// computes them from `data.ticks`.
    pub fn load(cfg: &BacktestConfig, from_cov: Option<&Path>) -> Result<Self> {
        let assets = &cfg.data.assets;
        let cov_path = from_cov.map(Path::to_path_buf).or_else(|| cfg.data.covariances.clone());
        let (series, clean, from_ticks) = match (cov_path, &cfg.data.ticks) {
            (Some(p), _) => {
                let s = load_cov_series(&p, Some(assets)).map_err(|e| e.context(format!("loading {}", p.display())))?;
                (s, None, false)
            }
            (None, Some(t)) => {
                let ticks = load_ticks(t, &cfg.clean.session()?).map_err(|e| e.context(format!("loading {}", t.display())))?;
                let (s, report) = realized_from_ticks(&ticks, assets, &cfg.clean, &cfg.realized)?;
                (s, Some(report), true)
            }
            (None, None) => return Err(Error::Config("data needs either ticks or covariances".into())),
        };
        let bars = match &cfg.data.bars {
            Some(p) => {
                let records = load_bars(p).map_err(|e| e.context(format!("loading {}", p.display())))?;
                Some(bar_panels(&records, assets)?)
            }
            None => None,
        };
        Ok(Self {
            series,
            bars,
            meta: sector_meta(cfg)?,
            clean,
            from_ticks,
        })
    }

    /// Wraps an in-memory covariance series.
    pub fn from_series(series: CovMatrixSeries) -> Self {
        Self {
            series,
            bars: None,
            meta: Vec::new(),
            clean: None,
            from_ticks: false,
        }
    }
}

fn sector_meta(cfg: &BacktestConfig) -> Result<Vec<AssetMeta>> {
    if cfg.data.sectors.is_empty() {
        return Ok(Vec::new());
    }
    cfg.data
        .assets
        .iter()
        .map(|a| {
            let sector = cfg.data.sectors.get(a).ok_or_else(|| Error::Metadata(format!("no sector for asset {a}")))?;
            Ok(AssetMeta {
                ticker: a.clone(),
                sector: sector.clone(),
            })
        })
        .collect()
}

/// One rolling split, as index ranges into the daily series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub label: String,
    pub is: Range<usize>,
    pub oos: Range<usize>,
}

/// Rolling windows that advance by the out-of-sample length. The last
/// out-of-sample block may be shorter than configured.
pub fn make_windows(dates: &[NaiveDate], wc: &WindowConfig) -> Result<Vec<Window>> {
    let mut out = Vec::new();
    match wc.unit {
        WindowUnit::Days => {
            let mut s = 0;
            while s + wc.in_sample < dates.len() {
                let oos = s + wc.in_sample..(s + wc.in_sample + wc.out_of_sample).min(dates.len());
                out.push(Window {
                    label: dates[oos.start].to_string(),
                    is: s..s + wc.in_sample,
                    oos,
                });
                s += wc.out_of_sample;
            }
        }
        WindowUnit::Years => {
            // index of the first day of each calendar year present
            let mut starts: Vec<(i32, usize)> = Vec::new();
            for (i, d) in dates.iter().enumerate() {
                if starts.last().is_none_or(|(y, _)| *y != d.year()) {
                    starts.push((d.year(), i));
                }
            }
            let bound = |k: usize| starts.get(k).map_or(dates.len(), |s| s.1);
            let mut k = 0;
            while k + wc.in_sample < starts.len() {
                let first = k + wc.in_sample;
                let last = (first + wc.out_of_sample).min(starts.len()) - 1;
                let label = if first == last {
                    starts[first].0.to_string()
                } else {
                    format!("{}-{}", starts[first].0, starts[last].0)
                };
                out.push(Window {
                    label,
                    is: bound(k)..bound(first),
                    oos: bound(first)..bound(last + 1),
                });
                k += wc.out_of_sample;
            }
        }
    }
    if out.is_empty() {
        let unit = match wc.unit {
            WindowUnit::Years => "years",
            WindowUnit::Days => "days",
        };
        return Err(Error::Config(format!(
            "data cover {} days, not enough for an in-sample window of {} {unit} plus one out-of-sample day",
            dates.len(),
            wc.in_sample
        )));
    }
    Ok(out)
}

/// Daily series derived once from the realized covariances.
struct Prepared {
    dates: Vec<NaiveDate>,
    /// Realized covariances as measured, used for evaluation.
    raw: Vec<DMatrix<f64>>,
    /// Ridge-repaired covariances, used as forecasting inputs.
    repaired: Vec<crate::realized::CovarianceMatrix>,
    /// `variances[i][t]`.
    variances: Vec<Vec<f64>>,
    corrs: Vec<DMatrix<f64>>,
    nu: Vec<DVector<f64>>,
    repaired_days: usize,
    non_psd_days: usize,
}

fn prepare(series: &CovMatrixSeries, ridge: f64, need_corr: bool) -> Result<Prepared> {
    let m = series.dim();
    let repaired: Vec<_> = series.matrices().par_iter().map(|s| ensure_invertible(s, ridge)).collect();
    let nu = repaired
        .par_iter()
        .map(|s| realized_weights(s).map_err(|e| e.context(format!("realized weights {}", s.date))))
        .collect::<Result<Vec<_>>>()?;
    let corrs = if need_corr {
        repaired
            .par_iter()
            .map(|s| {
                realized_correlation(s)
                    .map(|c| c.values)
                    .map_err(|e| e.context(format!("realized correlation {}", s.date)))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let variances = (0..m).map(|i| series.matrices().iter().map(|s| s.values[(i, i)]).collect()).collect();
    Ok(Prepared {
        dates: series.dates(),
        raw: series.matrices().iter().map(|s| s.values.clone()).collect(),
        repaired_days: repaired.iter().filter(|s| s.is_repaired()).count(),
        non_psd_days: series.matrices().iter().filter(|s| !s.psd).count(),
        repaired,
        variances,
        corrs,
        nu,
    })
}

#[derive(Debug, Clone)]
struct WindowFit {
    har: Option<HarParams>,
    dcc: Option<DccParams>,
    dcw: Option<DcwParams>,
}

fn fit_window(p: &Prepared, w: &Window, strategies: &[Strategy]) -> Result<WindowFit> {
    let need_har = strategies.iter().any(|s| matches!(s, Strategy::Vt | Strategy::Dcc));
    let need_dcc = strategies.contains(&Strategy::Dcc);
    let need_dcw = strategies.contains(&Strategy::Dcw);
    let n = w.is.len();
    if need_har && n < HAR_MIN_DAYS {
        return Err(Error::Config(format!(
            "window {}: in-sample has {n} days, the HAR fit needs {HAR_MIN_DAYS}",
            w.label
        )));
    }
    if (need_dcc || need_dcw) && n < DYNAMIC_MIN_DAYS {
        return Err(Error::Config(format!(
            "window {}: in-sample has {n} days, the DCC and DCW fits need {DYNAMIC_MIN_DAYS}",
            w.label
        )));
    }
    let ctx = |s: Strategy| move |e: Error| e.context(format!("{s} fit, window {}", w.label));
    let har = if need_har {
        let series: Vec<Vec<f64>> = p.variances.iter().map(|v| v[w.is.clone()].to_vec()).collect();
        Some(har_fit(&series).map_err(ctx(Strategy::Vt))?)
    } else {
        None
    };
    let dcc = if need_dcc {
        Some(dcc_fit(&p.corrs[w.is.clone()]).map_err(ctx(Strategy::Dcc))?.params)
    } else {
        None
    };
    let dcw = if need_dcw {
        Some(dcw_fit(&p.nu[w.is.clone()]).map_err(ctx(Strategy::Dcw))?.params)
    } else {
        None
    };
    Ok(WindowFit {
        har,
        dcc,
        dcw,
    })
}

/// What a strategy hands the allocator for one day.
#[derive(Debug, Clone)]
enum DayForecast {
    Covariance(DMatrix<f64>),
    Weights(DVector<f64>),
}

struct Fold {
    days: Vec<DayForecast>,
    har_floored: usize,
    min_divisor: Option<f64>,
    /// DCW fitted values over the in-sample window.
    is_fitted: Vec<DVector<f64>>,
}

fn har_sigma2(p: &Prepared, har: &HarParams, t: usize, floored: &mut usize) -> Result<DVector<f64>> {
    let hist: Vec<&[f64]> = p.variances.iter().map(|v| &v[t - HAR_LAGS..t]).collect();
    let f = har_forecast(har, &hist)?;
    *floored += f.floored;
    Ok(f.sigma2)
}

/// Runs one strategy's forecast recursion over a window. Forecasts for day
/// t read data dated strictly before t.
fn forecast_fold(
    p: &Prepared,
    w: &Window,
    fit: &WindowFit,
    strategy: Strategy,
    ridge: f64,
    feedback: DcwFeedback,
) -> Result<Fold> {
    let m = p.raw[0].nrows();
    let mut fold = Fold {
        days: Vec::with_capacity(w.oos.len()),
        har_floored: 0,
        min_divisor: None,
        is_fitted: Vec::new(),
    };
    let ctx = |t: usize| move |e: Error| e.context(format!("{strategy} forecast for {}", p.dates[t]));
    let missing = |what: &str| Error::Fit(format!("{what} parameters were not fitted"));
    match strategy {
        Strategy::Naive => {
            let w0 = naive_weights(m)?;
            fold.days = w.oos.clone().map(|_| DayForecast::Weights(w0.clone())).collect();
        }
        Strategy::Vt => {
            let har = fit.har.as_ref().ok_or_else(|| missing("HAR"))?;
            for t in w.oos.clone() {
                let mut day = || -> Result<_> {
                    let s2 = har_sigma2(p, har, t, &mut fold.har_floored)?;
                    Ok(ensure_cov(vt_forecast(&s2)?, p.dates[t], ridge))
                };
                fold.days.push(DayForecast::Covariance(day().map_err(ctx(t))?));
            }
        }
        Strategy::Rw => {
            for t in w.oos.clone() {
                if t == 0 {
                    return Err(ctx(t)(Error::insufficient("RW forecast", "no previous day")));
                }
                fold.days.push(DayForecast::Covariance(rw_forecast(&p.repaired[t - 1], ridge).values));
            }
        }
        Strategy::Dcc => {
            let har = fit.har.as_ref().ok_or_else(|| missing("HAR"))?;
            let dcc = fit.dcc.as_ref().ok_or_else(|| missing("DCC"))?;
            let mut r = dcc.pbar.clone();
            for t in w.is.start + 1..w.oos.end {
                let state = DccState {
                    prev_r: r,
                    prev_p: p.corrs[t - 1].clone(),
                };
                r = dcc_forecast(dcc, &state);
                if t >= w.oos.start {
                    let mut day = || -> Result<_> {
                        let s2 = har_sigma2(p, har, t, &mut fold.har_floored)?;
                        Ok(ensure_cov(dcc_covariance(&r, &s2)?, p.dates[t], ridge))
                    };
                    fold.days.push(DayForecast::Covariance(day().map_err(ctx(t))?));
                }
            }
        }
        Strategy::Dcw => {
            let dcw = fit.dcw.as_ref().ok_or_else(|| missing("DCW"))?;
            let mut omega = dcw.omega0.clone();
            fold.is_fitted.push(omega.clone());
            for t in w.is.start + 1..w.oos.end {
                if t < w.oos.start {
                    omega = match feedback {
                        DcwFeedback::Raw => dcw_raw(dcw, &p.nu[t - 1], &omega),
                        DcwFeedback::Normalized => dcw_forecast(dcw, &p.nu[t - 1], &omega).map(|s| s.normalized),
                    }
                    .map_err(ctx(t))?;
                    fold.is_fitted.push(omega.clone());
                    continue;
                }
                let step = dcw_forecast(dcw, &p.nu[t - 1], &omega).map_err(ctx(t))?;
                let d = step.divisor.abs();
                fold.min_divisor = Some(fold.min_divisor.map_or(d, |v: f64| v.min(d)));
                omega = match feedback {
                    DcwFeedback::Raw => step.raw,
                    DcwFeedback::Normalized => step.normalized.clone(),
                };
                fold.days.push(DayForecast::Weights(step.normalized));
            }
        }
    }
    Ok(fold)
}

fn ensure_cov(omega: DMatrix<f64>, date: NaiveDate, ridge: f64) -> DMatrix<f64> {
    ensure_invertible(&crate::realized::CovarianceMatrix::new(date, omega), ridge).values
}

/// Allocated weights of one strategy on one window, per exposure constraint.
struct CellWeights {
    /// `by_ec[k][d]` for the k-th configured constraint.
    by_ec: Vec<Vec<DVector<f64>>>,
    binding: Vec<usize>,
    iterations: Vec<usize>,
    /// Unconstrained weights, the strategy's forecast of the realized weights.
    model: Vec<DVector<f64>>,
}

fn allocate(fold: &Fold, ecs: &[ExposureConstraint], dates: &[NaiveDate], strategy: Strategy) -> Result<CellWeights> {
    let n = fold.days.len();
    let mut out = CellWeights {
        by_ec: vec![Vec::with_capacity(n); ecs.len()],
        binding: vec![0; ecs.len()],
        iterations: vec![0; ecs.len()],
        model: Vec::with_capacity(n),
    };
    let mut warm: Vec<Option<ActiveSet>> = vec![None; ecs.len()];
    for (d, day) in fold.days.iter().enumerate() {
        let ctx = |e: Error| e.context(format!("{strategy} allocation for {}", dates[d]));
        match day {
            DayForecast::Weights(w) => {
                out.model.push(w.clone());
                for (k, &ec) in ecs.iter().enumerate() {
                    let r = project_to_constraint(w, ec, warm[k].as_ref()).map_err(ctx)?;
                    out.binding[k] += r.binding as usize;
                    out.iterations[k] += r.iterations;
                    if r.active_set.is_some() {
                        warm[k] = r.active_set;
                    }
                    out.by_ec[k].push(r.weights);
                }
            }
            DayForecast::Covariance(omega) => {
                out.model.push(min_variance(omega).map_err(ctx)?.weights);
                for (k, &ec) in ecs.iter().enumerate() {
                    let r = constrained_min_variance_warm(omega, ec, warm[k].as_ref()).map_err(ctx)?;
                    out.binding[k] += r.binding as usize;
                    out.iterations[k] += r.iterations;
                    if r.active_set.is_some() {
                        warm[k] = r.active_set;
                    }
                    out.by_ec[k].push(r.weights);
                }
            }
        }
    }
    Ok(out)
}

/// Allocated weights of one strategy under one constraint over all
/// out-of-sample days.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPath {
    pub strategy: Strategy,
    pub ec: ExposureConstraint,
    pub dates: Vec<NaiveDate>,
    pub weights: Vec<DVector<f64>>,
}

/// Result of [`run_backtest`]: the report plus every persisted series.
#[derive(Debug, Clone)]
pub struct BacktestOutput {
    pub report: PerformanceReport,
    pub weights: Vec<WeightPath>,
    pub params: Vec<(String, ModelParams)>,
    pub realized_weights: Vec<(NaiveDate, DVector<f64>)>,
    /// Files other than the report tables, as `(relative path, bytes)`.
    pub artifacts: Vec<(String, Vec<u8>)>,
}

/// Fits, forecasts, allocates and evaluates every configured strategy on
/// every rolling window.
pub fn run_backtest(cfg: &BacktestConfig, inputs: &MarketInputs) -> Result<BacktestOutput> {
    cfg.validate()?;
    let series = &inputs.series;
    if series.is_empty() {
        return Err(Error::EmptyInput("covariance series has no days".into()));
    }
    if series.assets() != cfg.data.assets.as_slice() {
        return Err(Error::Metadata(format!(
            "covariance assets {:?} differ from configured assets {:?}",
            series.assets(),
            cfg.data.assets
        )));
    }
    let strategies = cfg.strategy_list();
    let ecs = cfg.ec_grid.clone();
    let need_corr = strategies.contains(&Strategy::Dcc);
    let p = prepare(series, cfg.realized.ridge, need_corr)?;
    let windows = make_windows(&p.dates, &cfg.windows)?;

    let fits = windows
        .par_iter()
        .map(|w| fit_window(&p, w, &strategies))
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, Strategy)> =
        (0..windows.len()).flat_map(|wi| strategies.iter().map(move |&s| (wi, s))).collect();
    let results = cells
        .par_iter()
        .map(|&(wi, s)| {
            let w = &windows[wi];
            let fold = forecast_fold(&p, w, &fits[wi], s, cfg.realized.ridge, cfg.dcw.feedback)?;
            let alloc = allocate(&fold, &ecs, &p.dates[w.oos.clone()], s)?;
            Ok((fold, alloc))
        })
        .collect::<Result<Vec<_>>>()?;

    // single-threaded reduction in cell order
    let cell_index = |wi: usize, s: Strategy| wi * strategies.len() + strategies.iter().position(|x| *x == s).unwrap();
    let window_days: Vec<usize> = windows.iter().map(|w| w.oos.len()).collect();
    let oc: Option<Vec<Vec<DVector<f64>>>> = match &inputs.bars {
        Some(bars) => Some(
            windows
                .iter()
                .map(|w| {
                    p.dates[w.oos.clone()]
                        .iter()
                        .map(|d| {
                            bars.get(d)
                                .map(|b| b.oc_returns.clone())
                                .ok_or_else(|| Error::Misaligned(format!("no daily bars for {d}")))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };

    let mut metrics = Vec::new();
    let mut weight_paths = Vec::new();
    for &s in &strategies {
        for (k, &ec) in ecs.iter().enumerate() {
            let mut pv = Vec::new();
            let mut to = Vec::new();
            let mut tox = Vec::new();
            let mut path = WeightPath {
                strategy: s,
                ec,
                dates: Vec::new(),
                weights: Vec::new(),
            };
            let mut binding = 0;
            let mut iterations = 0;
            for (wi, w) in windows.iter().enumerate() {
                let alloc = &results[cell_index(wi, s)].1;
                let ws = &alloc.by_ec[k];
                pv.push(portfolio_variance(ws, &p.raw[w.oos.clone()])?);
                to.push(turnover(ws)?);
                if let Some(oc) = &oc {
                    tox.push(exact_turnover(ws, &oc[wi])?);
                }
                binding += alloc.binding[k];
                iterations += alloc.iterations[k];
                path.dates.extend_from_slice(&p.dates[w.oos.clone()]);
                path.weights.extend(ws.iter().cloned());
            }
            let agg = |v: &[f64]| day_weighted_mean(&v.iter().copied().zip(window_days.iter().copied()).collect::<Vec<_>>());
            let (to_exact, to_exact_all) = if oc.is_some() {
                let a = agg(&tox)?;
                (Some(tox), Some(a))
            } else {
                (None, None)
            };
            metrics.push(CellMetrics {
                strategy: s,
                ec,
                pv_all: agg(&pv)?,
                pv,
                to_all: agg(&to)?,
                to,
                to_exact,
                to_exact_all,
                binding_days: binding,
                solver_iterations: iterations,
            });
            weight_paths.push(path);
        }
    }

    let find = |s: Strategy, ec: ExposureConstraint| metrics.iter().find(|c| c.strategy == s && c.ec == ec).unwrap();
    let mut switches = Vec::new();
    for sw in cfg.switches() {
        for &ec in &ecs {
            let (a, b) = (find(sw.from, ec), find(sw.to, ec));
            let per = |f: &dyn Fn(f64, f64, f64, f64) -> f64| -> Vec<f64> {
                (0..windows.len()).map(|i| f(a.pv[i], b.pv[i], a.to[i], b.to[i])).collect()
            };
            let ceq_f = |p1: f64, p2: f64, _: f64, _: f64| ceq(p1, p2, &cfg.eval);
            let nceq_f = |p1: f64, p2: f64, t1: f64, t2: f64| nceq(p1, p2, t1, t2, &cfg.eval);
            switches.push(SwitchMetrics {
                from: sw.from,
                to: sw.to,
                ec,
                ceq: per(&ceq_f),
                ceq_all: ceq_f(a.pv_all, b.pv_all, a.to_all, b.to_all),
                nceq: per(&nceq_f),
                nceq_all: nceq_f(a.pv_all, b.pv_all, a.to_all, b.to_all),
                betc: (0..windows.len()).map(|i| betc(a.pv[i], b.pv[i], a.to[i], b.to[i])).collect(),
                betc_all: betc(a.pv_all, b.pv_all, a.to_all, b.to_all),
            });
        }
    }

    let assets = series.assets().to_vec();
    let mut oos = Vec::new();
    let mut ins = Vec::new();
    for &s in strategies.iter().filter(|s| **s != Strategy::Naive) {
        for (wi, w) in windows.iter().enumerate() {
            let (fold, alloc) = &results[cell_index(wi, s)];
            let r2 = oos_r2(&alloc.model, &p.nu[w.oos.clone()])?;
            oos.extend(r2.into_iter().zip(&assets).map(|(r2, a)| R2Entry {
                strategy: s,
                window: w.label.clone(),
                asset: a.clone(),
                r2,
            }));
            if s == Strategy::Dcw && fold.is_fitted.len() == w.is.len() {
                let r2 = is_r2(&fold.is_fitted, &p.nu[w.is.clone()])?;
                ins.extend(r2.into_iter().zip(&assets).map(|(r2, a)| R2Entry {
                    strategy: s,
                    window: w.label.clone(),
                    asset: a.clone(),
                    r2,
                }));
            }
        }
    }

    let grid = envelope_grid();
    let mut envelopes: Vec<StrategyEnvelope> = strategies
        .iter()
        .map(|&s| {
            let lines: Vec<EnvelopeLine> = ecs
                .iter()
                .map(|&ec| {
                    let c = find(s, ec);
                    EnvelopeLine {
                        ec,
                        pv: c.pv_all,
                        to: c.to_all,
                    }
                })
                .collect();
            StrategyEnvelope {
                strategy: s,
                envelope: utility_envelope(&lines, &grid),
                diff_vs_vt: None,
            }
        })
        .collect();
    if let Some(vt) = envelopes.iter().find(|e| e.strategy == Strategy::Vt).cloned() {
        for e in &mut envelopes {
            e.diff_vs_vt = Some(
                e.envelope
                    .points
                    .iter()
                    .zip(&vt.envelope.points)
                    .map(|(a, b)| a.value - b.value)
                    .collect(),
            );
        }
    }

    let mut sectors = Vec::new();
    if !inputs.meta.is_empty() {
        let widest = ecs.iter().copied().max_by(|a, b| a.limit().total_cmp(&b.limit())).unwrap();
        for path in weight_paths.iter().filter(|w| w.ec == widest) {
            sectors.push(StrategySectors {
                strategy: path.strategy,
                ec: widest,
                dates: path.dates.clone(),
                shares: sector_importance(&path.weights, &assets, &inputs.meta)?,
            });
        }
    }

    let diagnostics = Diagnostics {
        days: p.dates.len(),
        repaired_days: p.repaired_days,
        non_psd_days: p.non_psd_days,
        har_floored: results.iter().map(|(f, _)| f.har_floored).sum(),
        dcw_min_divisor: results
            .iter()
            .filter_map(|(f, _)| f.min_divisor)
            .min_by(|a, b| a.total_cmp(b)),
        clean: inputs.clean.clone(),
    };

    let report = PerformanceReport {
        assets: assets.clone(),
        eval: cfg.eval,
        windows: windows
            .iter()
            .map(|w| WindowSummary {
                label: w.label.clone(),
                is_start: p.dates[w.is.start],
                is_end: p.dates[w.is.end - 1],
                oos_start: p.dates[w.oos.start],
                oos_end: p.dates[w.oos.end - 1],
                oos_days: w.oos.len(),
            })
            .collect(),
        cells: metrics,
        switches,
        oos_r2: oos,
        is_r2: ins,
        envelopes,
        sectors,
        diagnostics,
    };

    let params: Vec<(String, ModelParams)> = windows
        .iter()
        .zip(&fits)
        .map(|(w, f)| {
            (
                w.label.clone(),
                ModelParams {
                    assets: assets.clone(),
                    har: f.har.clone(),
                    dcc: f.dcc.clone(),
                    dcw: f.dcw.clone(),
                },
            )
        })
        .collect();
    let realized_weights: Vec<(NaiveDate, DVector<f64>)> = p.dates.iter().copied().zip(p.nu.iter().cloned()).collect();

    let mut artifacts = vec![
        ("weights.csv".to_string(), weights_csv(&assets, &weight_paths).into_bytes()),
        ("realized_weights.csv".to_string(), realized_weights_csv(&assets, &realized_weights).into_bytes()),
    ];
    for (label, mp) in &params {
        artifacts.push((format!("params/{label}.txt"), mp.to_kv().into_bytes()));
    }
    if inputs.from_ticks {
        artifacts.push(("covariances.csv".to_string(), cov_series_bytes(series)?));
    }

    Ok(BacktestOutput {
        report,
        weights: weight_paths,
        params,
        realized_weights,
        artifacts,
    })
}

fn weights_csv(assets: &[String], paths: &[WeightPath]) -> String {
    let mut s = format!("strategy,ec,date,{}\n", assets.join(","));
    for p in paths {
        for (d, w) in p.dates.iter().zip(&p.weights) {
            let vals: Vec<String> = w.iter().map(|v| format!("{v:?}")).collect();
            writeln!(s, "{},{},{},{}", p.strategy, p.ec.label(), d, vals.join(",")).unwrap();
        }
    }
    s
}

fn realized_weights_csv(assets: &[String], rows: &[(NaiveDate, DVector<f64>)]) -> String {
    let mut s = format!("date,{}\n", assets.join(","));
    for (d, w) in rows {
        let vals: Vec<String> = w.iter().map(|v| format!("{v:?}")).collect();
        writeln!(s, "{d},{}", vals.join(",")).unwrap();
    }
    s
}

fn cov_series_bytes(series: &CovMatrixSeries) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_cov_series_to(&mut buf, series)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn days(start: (i32, u32, u32), n: usize) -> Vec<NaiveDate> {
        crate::backtest::business_days(NaiveDate::from_ymd_opt(start.0, start.1, start.2).unwrap(), n)
    }

    #[test]
    fn yearly_windows_advance_by_oos() {
        let mut d = days((2005, 1, 3), 261 * 8);
        d.retain(|d| d.year() <= 2012);
        let w = make_windows(&d, &WindowConfig::default()).unwrap();
        let labels: Vec<&str> = w.iter().map(|w| w.label.as_str()).collect();
        assert_eq!(labels, ["2010", "2011", "2012"]);
        for win in &w {
            assert_eq!(d[win.oos.start].year().to_string(), win.label);
            assert_eq!(win.is.end, win.oos.start);
            let years: std::collections::BTreeSet<i32> = d[win.is.clone()].iter().map(|d| d.year()).collect();
            assert_eq!(years.len(), 5);
        }
        assert_eq!(w[2].oos.end, d.len());
    }

    #[test]
    fn day_windows_allow_partial_tail() {
        let d = days((2005, 1, 3), 250);
        let wc = WindowConfig {
            unit: WindowUnit::Days,
            in_sample: 100,
            out_of_sample: 60,
        };
        let w = make_windows(&d, &wc).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w[0].is, 0..100);
        assert_eq!(w[0].oos, 100..160);
        assert_eq!(w[2].oos, 220..250);
        assert_eq!(w[1].label, d[160].to_string());
    }

    #[test]
    fn too_little_data_is_a_config_error() {
        let d = days((2005, 1, 3), 50);
        let err = make_windows(&d, &WindowConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
