//! Report data model and file emission.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::allocation::ExposureConstraint;
use crate::evaluation::{histogram, BetcVerdict, EvalConfig, Envelope, SectorShares};
use crate::forecast::Strategy;
use crate::market_data::CleanReport;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub label: String,
    pub is_start: NaiveDate,
    pub is_end: NaiveDate,
    pub oos_start: NaiveDate,
    pub oos_end: NaiveDate,
    pub oos_days: usize,
}

/// Measures of one strategy under one exposure constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub strategy: Strategy,
    pub ec: ExposureConstraint,
    /// Per-window values followed by the day-weighted aggregate in `*_all`.
    pub pv: Vec<f64>,
    pub pv_all: f64,
    pub to: Vec<f64>,
    pub to_all: f64,
    pub to_exact: Option<Vec<f64>>,
    pub to_exact_all: Option<f64>,
    pub binding_days: usize,
    pub solver_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchMetrics {
    pub from: Strategy,
    pub to: Strategy,
    pub ec: ExposureConstraint,
    pub ceq: Vec<f64>,
    pub ceq_all: f64,
    pub nceq: Vec<f64>,
    pub nceq_all: f64,
    pub betc: Vec<BetcVerdict>,
    pub betc_all: BetcVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Entry {
    pub strategy: Strategy,
    pub window: String,
    pub asset: String,
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEnvelope {
    pub strategy: Strategy,
    pub envelope: Envelope,
    /// Envelope minus the VT envelope on the same grid, when VT is present.
    pub diff_vs_vt: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySectors {
    pub strategy: Strategy,
    pub ec: ExposureConstraint,
    pub dates: Vec<NaiveDate>,
    pub shares: SectorShares,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub days: usize,
    /// Realized matrices that needed a ridge before inversion.
    pub repaired_days: usize,
    pub non_psd_days: usize,
    /// HAR forecasts floored at the variance floor.
    pub har_floored: usize,
    /// Smallest absolute DCW normalization divisor seen out of sample.
    pub dcw_min_divisor: Option<f64>,
    pub clean: Option<CleanReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub assets: Vec<String>,
    pub eval: EvalConfig,
    pub windows: Vec<WindowSummary>,
    pub cells: Vec<CellMetrics>,
    pub switches: Vec<SwitchMetrics>,
    pub oos_r2: Vec<R2Entry>,
    pub is_r2: Vec<R2Entry>,
    pub envelopes: Vec<StrategyEnvelope>,
    pub sectors: Vec<StrategySectors>,
    pub diagnostics: Diagnostics,
}

impl PerformanceReport {
    pub fn cell(&self, strategy: Strategy, ec: ExposureConstraint) -> Option<&CellMetrics> {
        self.cells.iter().find(|c| c.strategy == strategy && c.ec == ec)
    }

    pub fn switch(&self, from: Strategy, to: Strategy, ec: ExposureConstraint) -> Option<&SwitchMetrics> {
        self.switches.iter().find(|s| s.from == from && s.to == to && s.ec == ec)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_hash: String,
    pub files: Vec<ManifestEntry>,
}

fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

fn table(header_prefix: &[&str], windows: &[WindowSummary]) -> String {
    let mut cols: Vec<String> = header_prefix.iter().map(|s| s.to_string()).collect();
    cols.extend(windows.iter().map(|w| w.label.clone()));
    cols.push("All".into());
    let mut s = cols.join(",");
    s.push('\n');
    s
}

fn row(out: &mut String, prefix: &[String], values: impl Iterator<Item = String>) {
    let mut cells: Vec<String> = prefix.to_vec();
    cells.extend(values);
    writeln!(out, "{}", cells.join(",")).unwrap();
}

fn sha_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Renders every report table as `(file name, contents)` pairs.
pub fn render_tables(report: &PerformanceReport) -> Result<Vec<(String, String)>> {
    let w = &report.windows;
    let mut files = Vec::new();

    let mut pv = table(&["strategy", "ec"], w);
    let mut to = table(&["strategy", "ec"], w);
    let mut tox = table(&["strategy", "ec"], w);
    let mut any_exact = false;
    for c in &report.cells {
        let key = [c.strategy.to_string(), c.ec.label()];
        row(&mut pv, &key, c.pv.iter().chain([&c.pv_all]).map(|v| fmt_f(*v)));
        row(&mut to, &key, c.to.iter().chain([&c.to_all]).map(|v| fmt_f(*v)));
        if let (Some(v), Some(a)) = (&c.to_exact, c.to_exact_all) {
            any_exact = true;
            row(&mut tox, &key, v.iter().chain([&a]).map(|v| fmt_f(*v)));
        }
    }
    files.push(("pv.csv".into(), pv));
    files.push(("to.csv".into(), to));
    if any_exact {
        files.push(("to_exact.csv".into(), tox));
    }

    let mut ceq = table(&["from", "to", "ec"], w);
    let mut nceq = table(&["from", "to", "ec"], w);
    let mut betc = table(&["from", "to", "ec"], w);
    for s in &report.switches {
        let key = [s.from.to_string(), s.to.to_string(), s.ec.label()];
        row(&mut ceq, &key, s.ceq.iter().chain([&s.ceq_all]).map(|v| fmt_f(*v)));
        row(&mut nceq, &key, s.nceq.iter().chain([&s.nceq_all]).map(|v| fmt_f(*v)));
        row(&mut betc, &key, s.betc.iter().chain([&s.betc_all]).map(|v| v.to_string()));
    }
    files.push(("ceq.csv".into(), ceq));
    files.push(("nceq.csv".into(), nceq));
    files.push(("betc.csv".into(), betc));

    let r2_table = |entries: &[R2Entry]| {
        let mut s = String::from("strategy,window,asset,r2\n");
        for e in entries {
            let v = e.r2.map(fmt_f).unwrap_or_default();
            writeln!(s, "{},{},{},{}", e.strategy, e.window, e.asset, v).unwrap();
        }
        s
    };
    files.push(("r2_oos.csv".into(), r2_table(&report.oos_r2)));
    files.push(("r2_is.csv".into(), r2_table(&report.is_r2)));
    let mut hist = String::from("strategy,lo,hi,count\n");
    for strategy in Strategy::ALL {
        let vals: Vec<f64> = report.oos_r2.iter().filter(|e| e.strategy == strategy).filter_map(|e| e.r2).collect();
        if vals.is_empty() {
            continue;
        }
        let h = histogram(&vals, -1.0, 1.0, 40);
        for (k, c) in h.counts.iter().enumerate() {
            writeln!(hist, "{},{},{},{}", strategy, fmt_f(h.edges[k]), fmt_f(h.edges[k + 1]), c).unwrap();
        }
    }
    files.push(("r2_hist.csv".into(), hist));

    let mut env = String::from("strategy,x_bp,utility_bp,argmax_ec,diff_vs_vt_bp\n");
    let mut brk = String::from("strategy,x_bp,from_ec,to_ec\n");
    for e in &report.envelopes {
        for (k, p) in e.envelope.points.iter().enumerate() {
            let diff = e.diff_vs_vt.as_ref().map(|d| fmt_f(d[k])).unwrap_or_default();
            let ec = e.envelope.lines[p.argmax].ec.label();
            writeln!(env, "{},{},{},{},{}", e.strategy, fmt_f(p.x), fmt_f(p.value), ec, diff).unwrap();
        }
        for b in &e.envelope.breakpoints {
            let l = &e.envelope.lines;
            writeln!(brk, "{},{},{},{}", e.strategy, fmt_f(b.x), l[b.from].ec.label(), l[b.to].ec.label()).unwrap();
        }
    }
    files.push(("envelope.csv".into(), env));
    files.push(("envelope_breakpoints.csv".into(), brk));

    if !report.sectors.is_empty() {
        let mut sec = String::from("strategy,ec,date,sector,share,cumulative\n");
        for s in &report.sectors {
            let cum = s.shares.cumulative();
            for (t, d) in s.dates.iter().enumerate() {
                for (k, name) in s.shares.sectors.iter().enumerate() {
                    writeln!(
                        sec,
                        "{},{},{},{},{},{}",
                        s.strategy,
                        s.ec.label(),
                        d,
                        name,
                        fmt_f(s.shares.shares[t][k]),
                        fmt_f(cum[t][k])
                    )
                    .unwrap();
                }
            }
        }
        files.push(("sectors.csv".into(), sec));
    }

    files.push(("summary.json".into(), serde_json::to_string_pretty(&summary(report))? + "\n"));
    Ok(files)
}

/// Scalar metrics keyed by strategy and exposure constraint.
fn summary(report: &PerformanceReport) -> serde_json::Value {
    use serde_json::json;
    let cells: Vec<_> = report
        .cells
        .iter()
        .map(|c| {
            json!({
                "strategy": c.strategy,
                "ec": c.ec,
                "pv": c.pv_all,
                "to": c.to_all,
                "to_exact": c.to_exact_all,
                "transaction_cost": crate::evaluation::transaction_costs(c.to_all, &report.eval),
                "binding_days": c.binding_days,
            })
        })
        .collect();
    let switches: Vec<_> = report
        .switches
        .iter()
        .map(|s| {
            json!({
                "from": s.from,
                "to": s.to,
                "ec": s.ec,
                "ceq_bp": s.ceq_all,
                "nceq_bp": s.nceq_all,
                "betc": s.betc_all.to_string(),
            })
        })
        .collect();
    json!({
        "assets": report.assets,
        "gamma": report.eval.gamma,
        "tau": report.eval.tau,
        "windows": report.windows.iter().map(|w| &w.label).collect::<Vec<_>>(),
        "cells": cells,
        "switches": switches,
        "diagnostics": report.diagnostics,
    })
}

fn write_file(dir: &Path, name: &str, contents: &[u8], manifest: &mut Vec<ManifestEntry>) -> Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, contents).map_err(|e| Error::Io(e).context(format!("writing {}", path.display())))?;
    manifest.push(ManifestEntry {
        file: name.to_string(),
        sha256: sha_hex(contents),
    });
    Ok(())
}

/// Writes the report tables, `report.json` and any `extra` artifacts, then a
/// `manifest.json` listing every file with its digest.
pub fn emit_reports(
    report: &PerformanceReport,
    dir: impl AsRef<Path>,
    config_hash: &str,
    extra: &[(String, Vec<u8>)],
) -> Result<Manifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(e).context(format!("creating {}", dir.display())))?;
    let mut entries = Vec::new();
    for (name, body) in render_tables(report)? {
        write_file(dir, &name, body.as_bytes(), &mut entries)?;
    }
    let json = serde_json::to_string(report)? + "\n";
    write_file(dir, "report.json", json.as_bytes(), &mut entries)?;
    for (name, body) in extra {
        write_file(dir, name, body, &mut entries)?;
    }
    entries.sort_by(|a, b| a.file.cmp(&b.file));
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash.to_string(),
        files: entries,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

/// Reads `report.json` and the manifest from a previous run and re-emits the tables.
pub fn reemit_reports(input: impl AsRef<Path>, out: impl AsRef<Path>) -> Result<Manifest> {
    let input = input.as_ref();
    let text = std::fs::read_to_string(input.join("report.json"))
        .map_err(|e| Error::Io(e).context(format!("reading {}", input.join("report.json").display())))?;
    let report: PerformanceReport = serde_json::from_str(&text)?;
    let hash = std::fs::read_to_string(input.join("manifest.json"))
        .ok()
        .and_then(|m| serde_json::from_str::<Manifest>(&m).ok())
        .map(|m| m.config_hash)
        .unwrap_or_default();
    let out = out.as_ref();
    // artifacts other than the tables are carried over untouched
    let mut extra = Vec::new();
    if let Ok(m) = std::fs::read_to_string(input.join("manifest.json")) {
        let manifest: Manifest = serde_json::from_str(&m)?;
        let tables: Vec<String> = render_tables(&report)?.into_iter().map(|(n, _)| n).collect();
        for f in manifest.files {
            if f.file != "report.json" && !tables.contains(&f.file) {
                extra.push((f.file.clone(), std::fs::read(input.join(&f.file))?));
            }
        }
    }
    emit_reports(&report, out, &hash, &extra)
}
