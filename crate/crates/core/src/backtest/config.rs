use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::allocation::ExposureConstraint;
use crate::evaluation::EvalConfig;
use crate::forecast::Strategy;
use crate::market_data::{CleanConfig, DEFAULT_BIN_WIDTH_MINUTES};
use crate::realized::DEFAULT_RIDGE;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Tick CSV (`timestamp,ticker,price`).
    #[serde(default)]
    pub ticks: Option<PathBuf>,
    /// Daily bar CSV (`date,ticker,open,close`), needed for exact turnover.
    #[serde(default)]
    pub bars: Option<PathBuf>,
    /// Precomputed covariance series; takes precedence over ticks.
    #[serde(default)]
    pub covariances: Option<PathBuf>,
    pub assets: Vec<String>,
    /// Ticker to sector label.
    #[serde(default)]
    pub sectors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowUnit {
    /// Calendar years present in the data.
    Years,
    /// Trading days.
    Days,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub unit: WindowUnit,
    pub in_sample: usize,
    pub out_of_sample: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            unit: WindowUnit::Years,
            in_sample: 5,
            out_of_sample: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RealizedConfig {
    pub bin_minutes: i64,
    /// Relative ridge for repairing singular matrices.
    pub ridge: f64,
    /// Multiplier applied to log-returns before the kernel (100 = percent).
    pub return_scale: f64,
}

impl Default for RealizedConfig {
    fn default() -> Self {
        Self {
            bin_minutes: DEFAULT_BIN_WIDTH_MINUTES,
            ridge: DEFAULT_RIDGE,
            return_scale: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DcwFeedback {
    /// Feed back the recursion output before normalization.
    #[default]
    Raw,
    /// Feed back the normalized forecast.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DcwConfig {
    pub feedback: DcwFeedback,
}

/// A strategy switch `from -> to` reported in the CEQ and BETC tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Switch {
    pub from: Strategy,
    pub to: Strategy,
}

fn default_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

fn default_ec_grid() -> Vec<ExposureConstraint> {
    ExposureConstraint::GRID.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub windows: WindowConfig,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_ec_grid")]
    pub ec_grid: Vec<ExposureConstraint>,
    /// Switches for CEQ/BETC; defaults to consecutive strategies in
    /// `Naive, VT, RW, DCC, DCW` order among those configured.
    #[serde(default)]
    pub switches: Option<Vec<Switch>>,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub clean: CleanConfig,
    #[serde(default)]
    pub realized: RealizedConfig,
    #[serde(default)]
    pub dcw: DcwConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl BacktestConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config; relative data paths resolve against
    /// the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p {
                if inner.is_relative() {
                    *inner = base.join(&*inner);
                }
            }
        };
        fix(&mut self.data.ticks);
        fix(&mut self.data.bars);
        fix(&mut self.data.covariances);
        fix(&mut self.output);
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.assets.is_empty() {
            return Err(Error::Config("data.assets is empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.data.assets {
            if !seen.insert(a) {
                return Err(Error::Config(format!("duplicate asset {a}")));
            }
        }
        if self.ec_grid.is_empty() {
            return Err(Error::Config("ec_grid is empty".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("strategies is empty".into()));
        }
        if self.windows.in_sample == 0 || self.windows.out_of_sample == 0 {
            return Err(Error::Config("window lengths must be positive".into()));
        }
        if !(self.realized.ridge > 0.0) || !(self.realized.return_scale > 0.0) || self.realized.bin_minutes <= 0 {
            return Err(Error::Config("realized settings must be positive".into()));
        }
        self.eval.validate()?;
        self.clean.session()?;
        for s in self.switches() {
            if !self.strategies.contains(&s.from) || !self.strategies.contains(&s.to) {
                return Err(Error::Config(format!("switch {}->{} uses an unconfigured strategy", s.from, s.to)));
            }
        }
        Ok(())
    }

    pub fn switches(&self) -> Vec<Switch> {
        if let Some(s) = &self.switches {
            return s.clone();
        }
        let order = [Strategy::Naive, Strategy::Vt, Strategy::Rw, Strategy::Dcc, Strategy::Dcw];
        let present: Vec<Strategy> = order.into_iter().filter(|s| self.strategies.contains(s)).collect();
        present.windows(2).map(|w| Switch { from: w[0], to: w[1] }).collect()
    }

    /// Strategies in report order with duplicates removed.
    pub fn strategy_list(&self) -> Vec<Strategy> {
        let mut out = Vec::new();
        for s in Strategy::ALL {
            if self.strategies.contains(&s) {
                out.push(s);
            }
        }
        out
    }

    /// SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
