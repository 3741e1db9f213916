mod common;

use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate};
use nalgebra::DVector;

use minvar::allocation::ExposureConstraint;
use minvar::backtest::{
    business_days, emit_reports, generate_synthetic, make_windows, render_tables, run_backtest, write_synthetic,
    BacktestConfig, MarketInputs, SyntheticMarketSpec,
};
use minvar::evaluation::portfolio_variance;
use minvar::forecast::Strategy;
use minvar::realized::realized_weights;
use minvar::Error;

fn days_windows(is: usize, oos: usize) -> String {
    format!("[windows]\nunit = \"days\"\nin_sample = {is}\nout_of_sample = {oos}\n")
}

fn small_market(seed: u64) -> minvar::backtest::SyntheticMarket {
    let spec = SyntheticMarketSpec { assets: 3, days: 260, intraday_points: 10, seed, ..Default::default() };
    generate_synthetic(&spec).unwrap()
}

#[test]
fn naive_only_pv_is_the_equal_weight_average() {
    let market = small_market(1);
    let cfg = common::config(&market.tickers, &format!("strategies = [\"Naive\"]\n{}", days_windows(150, 50)));
    let out = run_backtest(&cfg, &MarketInputs::from_series(market.true_cov.clone())).unwrap();
    assert!(out.params.iter().all(|(_, p)| p.har.is_none() && p.dcc.is_none() && p.dcw.is_none()));
    let covs: Vec<_> = market.true_cov.matrices()[150..].iter().map(|s| s.values.clone()).collect();
    let ew = vec![DVector::from_element(3, 1.0 / 3.0); covs.len()];
    let expected = portfolio_variance(&ew, &covs).unwrap();
    for c in &out.report.cells {
        assert!((c.pv_all - expected).abs() <= 1e-12 * expected);
        assert_eq!(c.to_all, 1.0);
    }
}

#[test]
fn repeated_runs_emit_identical_files() {
    let market = small_market(2);
    let cfg = common::config(&market.tickers, &days_windows(150, 40));
    let inputs = MarketInputs::from_series(market.true_cov.clone());
    let tmp = tempfile::tempdir().unwrap();
    let mut manifests = Vec::new();
    for name in ["a", "b"] {
        let out = run_backtest(&cfg, &inputs).unwrap();
        manifests.push(emit_reports(&out.report, tmp.path().join(name), &cfg.hash(), &out.artifacts).unwrap());
    }
    assert_eq!(manifests[0], manifests[1]);
    for entry in &manifests[0].files {
        let a = std::fs::read(tmp.path().join("a").join(&entry.file)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(&entry.file)).unwrap();
        assert_eq!(a, b, "{}", entry.file);
    }
}

#[test]
fn every_oos_day_is_evaluated_once() {
    let market = small_market(3);
    let cfg = common::config(&market.tickers, &days_windows(120, 45));
    let out = run_backtest(&cfg, &MarketInputs::from_series(market.true_cov.clone())).unwrap();
    let dates = market.true_cov.dates();
    let expected: Vec<NaiveDate> = dates[120..].to_vec();
    assert_eq!(out.report.windows.iter().map(|w| w.oos_days).sum::<usize>(), expected.len());
    for path in &out.weights {
        assert_eq!(path.dates, expected, "{} {}", path.strategy, path.ec);
        let unique: BTreeSet<_> = path.dates.iter().collect();
        assert_eq!(unique.len(), path.dates.len());
    }
}

#[test]
fn three_strategies_six_bounds_give_eighteen_rows() {
    let market = small_market(4);
    let cfg = common::config(&market.tickers, &format!("strategies = [\"VT\", \"RW\", \"DCW\"]\n{}", days_windows(150, 110)));
    let out = run_backtest(&cfg, &MarketInputs::from_series(market.true_cov.clone())).unwrap();
    let tables = render_tables(&out.report).unwrap();
    let pv = tables.iter().find(|(name, _)| name == "pv.csv").unwrap();
    assert_eq!(pv.1.lines().count(), 1 + 18);
}

#[test]
fn config_hash_tracks_every_field() {
    let assets = vec!["A".to_string(), "B".to_string()];
    let base = common::config(&assets, "");
    let variants = [
        "seed = 1\n",
        "ec_grid = [1.0, \"inf\"]\n",
        "strategies = [\"Naive\", \"RW\"]\n",
        "[eval]\ngamma = 2.0\n",
        "[realized]\nridge = 1e-7\n",
        "[windows]\nin_sample = 4\n",
        "[dcw]\nfeedback = \"normalized\"\n",
    ];
    let mut hashes = BTreeSet::from([base.hash()]);
    for extra in variants {
        assert!(hashes.insert(common::config(&assets, extra).hash()), "{extra}");
    }
    assert_eq!(base.hash(), common::config(&assets, "").hash());

    let market = small_market(5);
    let cfg = common::config(&market.tickers, &format!("strategies = [\"Naive\"]\n{}", days_windows(200, 60)));
    let out = run_backtest(&cfg, &MarketInputs::from_series(market.true_cov.clone())).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let m = emit_reports(&out.report, tmp.path(), &cfg.hash(), &[]).unwrap();
    assert_eq!(m.config_hash, cfg.hash());
    assert!(tmp.path().join("manifest.json").exists());
}

#[test]
fn empty_grids_fail_validation() {
    let text = "ec_grid = []\n[data]\ncovariances = \"c.csv\"\nassets = [\"A\"]\n";
    assert!(matches!(BacktestConfig::from_toml_str(text), Err(Error::Config(_))));
    let text = "strategies = []\n[data]\ncovariances = \"c.csv\"\nassets = [\"A\"]\n";
    assert!(matches!(BacktestConfig::from_toml_str(text), Err(Error::Config(_))));
    let text = "[data]\ncovariances = \"c.csv\"\nassets = [\"A\"]\nextra = 1\n";
    assert!(matches!(BacktestConfig::from_toml_str(text), Err(Error::Config(_))));
}

#[test]
fn short_in_sample_is_reported_with_the_window() {
    let market = small_market(6);
    let cfg = common::config(&market.tickers, &days_windows(60, 50));
    match run_backtest(&cfg, &MarketInputs::from_series(market.true_cov.clone())) {
        Err(Error::Config(msg)) => assert!(msg.contains("window"), "{msg}"),
        other => panic!("expected a config error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn yearly_windows_follow_the_rolling_scheme() {
    let dates: Vec<NaiveDate> = business_days(NaiveDate::from_ymd_opt(2005, 1, 3).unwrap(), 3000)
        .into_iter()
        .filter(|d| d.year() <= 2015)
        .collect();
    let windows = make_windows(&dates, &Default::default()).unwrap();
    let labels: Vec<&str> = windows.iter().map(|w| w.label.as_str()).collect();
    assert_eq!(labels, ["2010", "2011", "2012", "2013", "2014", "2015"]);
    for (k, w) in windows.iter().enumerate() {
        assert_eq!(dates[w.is.start].year(), 2005 + k as i32);
        assert_eq!(dates[w.is.end - 1].year(), 2009 + k as i32);
        assert_eq!(w.is.end, w.oos.start);
        assert!(w.oos.clone().all(|i| dates[i].year() == 2010 + k as i32));
    }
}

#[test]
fn generator_is_reproducible_and_weights_sum_to_one() {
    let spec = SyntheticMarketSpec { assets: 2, days: 100, intraday_points: 20, seed: 42, ..Default::default() };
    let tmp = tempfile::tempdir().unwrap();
    for name in ["x", "y"] {
        write_synthetic(&generate_synthetic(&spec).unwrap(), tmp.path().join(name)).unwrap();
    }
    for f in ["ticks.csv", "bars.csv", "true_cov.csv", "true_weights.csv", "sectors.csv", "backtest.toml"] {
        let a = std::fs::read(tmp.path().join("x").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("y").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let market = generate_synthetic(&spec).unwrap();
    for nu in &market.true_weights {
        assert!((nu.sum() - 1.0).abs() <= 1e-10);
    }
    let bad = SyntheticMarketSpec { dcc_a: 0.3, dcc_b: 0.75, ..spec };
    assert!(generate_synthetic(&bad).is_err());
}

#[test]
fn kernel_tracks_true_covariance_without_noise() {
    let spec = SyntheticMarketSpec {
        assets: 2,
        days: 20,
        // sampling error shrinks like 1/sqrt(J); about 3.3/sqrt(J) here
        intraday_points: 8000,
        noise_scale: 0.0,
        seed: 9,
        ..Default::default()
    };
    let cfg = common::config(&spec.tickers(), "");
    let (market, inputs) = common::synthetic_inputs(&spec, &cfg);
    let mut total = 0.0;
    for (est, truth) in inputs.series.matrices().iter().zip(market.true_cov.matrices()) {
        assert_eq!(est.date, truth.date);
        total += (&est.values - &truth.values).norm() / truth.values.norm();
    }
    let mean = total / spec.days as f64;
    assert!(mean <= 0.05, "mean relative Frobenius error {mean}");
}

#[test]
fn constant_covariance_models_reach_the_true_minimum() {
    let spec = SyntheticMarketSpec {
        assets: 3,
        days: 400,
        intraday_points: 390,
        dcc_a: 0.0,
        dcc_b: 0.0,
        variance_vol: 0.0,
        // VT fixes the correlation matrix at the identity
        correlation: 0.0,
        seed: 17,
        ..Default::default()
    };
    let cfg = common::config(&spec.tickers(), &format!("ec_grid = [\"inf\"]\n{}", days_windows(250, 150)));
    let (market, inputs) = common::synthetic_inputs(&spec, &cfg);
    let truth = &market.true_cov.matrices()[0];
    assert!(market.true_cov.matrices().iter().all(|s| s.values == truth.values));
    let w_true = realized_weights(truth).unwrap();
    let realized: Vec<_> = inputs.series.matrices()[250..].iter().map(|s| s.values.clone()).collect();
    let oracle = portfolio_variance(&vec![w_true; realized.len()], &realized).unwrap();

    let out = run_backtest(&cfg, &inputs).unwrap();
    let pv = |s| out.report.cell(s, ExposureConstraint::Unbounded).unwrap().pv_all;
    for s in [Strategy::Vt, Strategy::Dcc, Strategy::Dcw] {
        let gap = pv(s) / oracle - 1.0;
        assert!(gap.abs() <= 0.02, "{s}: {} vs {oracle} ({gap:+.4})", pv(s));
    }
    let gap = pv(Strategy::Rw) / oracle - 1.0;
    assert!(gap.abs() <= 0.10, "RW: {} vs {oracle} ({gap:+.4})", pv(Strategy::Rw));
}
