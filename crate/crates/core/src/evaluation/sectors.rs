use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::market_data::AssetMeta;
use crate::{Error, Result};

/// Daily sector shares of absolute weight, sectors ordered by average share
/// (largest first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorShares {
    pub sectors: Vec<String>,
    /// `shares[t][s]` for day t and sector s.
    pub shares: Vec<Vec<f64>>,
    pub average: Vec<f64>,
}

impl SectorShares {
    /// Running sums across sectors for stacked plots.
    pub fn cumulative(&self) -> Vec<Vec<f64>> {
        self.shares
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|v| {
                        acc += v;
                        acc
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn sector_importance(weights: &[DVector<f64>], tickers: &[String], meta: &[AssetMeta]) -> Result<SectorShares> {
    let lookup: BTreeMap<&str, &str> = meta.iter().map(|m| (m.ticker.as_str(), m.sector.as_str())).collect();
    let mut names: Vec<String> = Vec::new();
    let mut sector_of = Vec::with_capacity(tickers.len());
    for t in tickers {
        let s = lookup
            .get(t.as_str())
            .ok_or_else(|| Error::Metadata(format!("no sector for ticker {t}")))?;
        let idx = match names.iter().position(|n| n == s) {
            Some(i) => i,
            None => {
                names.push(s.to_string());
                names.len() - 1
            }
        };
        sector_of.push(idx);
    }
    let k = names.len();
    let mut raw = Vec::with_capacity(weights.len());
    for w in weights {
        if w.len() != tickers.len() {
            return Err(Error::Misaligned(format!("{} weights for {} tickers", w.len(), tickers.len())));
        }
        let gross: f64 = w.iter().map(|v| v.abs()).sum();
        let mut row = vec![0.0; k];
        if gross > 0.0 {
            for (i, v) in w.iter().enumerate() {
                row[sector_of[i]] += v.abs() / gross;
            }
        }
        raw.push(row);
    }
    let n = raw.len().max(1) as f64;
    let avg: Vec<f64> = (0..k).map(|s| raw.iter().map(|r| r[s]).sum::<f64>() / n).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| avg[b].total_cmp(&avg[a]).then_with(|| names[a].cmp(&names[b])));
    Ok(SectorShares {
        sectors: order.iter().map(|&s| names[s].clone()).collect(),
        shares: raw.iter().map(|r| order.iter().map(|&s| r[s]).collect()).collect(),
        average: order.iter().map(|&s| avg[s]).collect(),
    })
}
