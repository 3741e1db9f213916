//! Flat `key=value` persistence of fitted model parameters.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{DccParams, DcwParams, HarParams};
use crate::{Error, Result};

/// Everything fitted on one in-sample window.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub assets: Vec<String>,
    pub har: Option<HarParams>,
    pub dcc: Option<DccParams>,
    pub dcw: Option<DcwParams>,
}

impl ModelParams {
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut put = |k: String, v: f64| {
            writeln!(s, "{k}={v:?}").unwrap();
        };
        if let Some(har) = &self.har {
            for (t, a) in self.assets.iter().zip(&har.alphas) {
                for (k, v) in a.iter().enumerate() {
                    put(format!("alpha{k}.{t}"), *v);
                }
            }
        }
        if let Some(dcc) = &self.dcc {
            put("dcc.a".into(), dcc.a);
            put("dcc.b".into(), dcc.b);
            let m = dcc.pbar.nrows();
            for i in 0..m {
                for j in i..m {
                    put(format!("dcc.pbar.{i}.{j}"), dcc.pbar[(i, j)]);
                }
            }
        }
        if let Some(dcw) = &self.dcw {
            for (name, vec) in [("a", &dcw.a), ("b", &dcw.b), ("omega_bar", &dcw.omega_bar), ("omega0", &dcw.omega0)] {
                for (t, v) in self.assets.iter().zip(vec.iter()) {
                    put(format!("dcw.{name}.{t}"), *v);
                }
            }
        }
        format!("assets={}\n{s}", self.assets.join(","))
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut assets: Option<Vec<String>> = None;
        let mut kv: BTreeMap<String, f64> = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::Parse { line: n as u64 + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key=value".into()))?;
            if k == "assets" {
                assets = Some(v.split(',').map(str::to_string).filter(|s| !s.is_empty()).collect());
                continue;
            }
            let val: f64 = v.parse().map_err(|e| bad(format!("{k}: {e}")))?;
            if kv.insert(k.to_string(), val).is_some() {
                return Err(bad(format!("duplicate key {k}")));
            }
        }
        let assets = assets.ok_or_else(|| Error::Parse { line: 0, msg: "missing assets line".into() })?;
        let m = assets.len();

        let har = if kv.contains_key(&format!("alpha0.{}", assets[0])) {
            let mut alphas = Vec::with_capacity(m);
            for t in &assets {
                let mut a = [0.0; 4];
                for (k, slot) in a.iter_mut().enumerate() {
                    *slot = take(&mut kv, format!("alpha{k}.{t}"))?;
                }
                alphas.push(a);
            }
            Some(HarParams { alphas })
        } else {
            None
        };
        let dcc = if kv.contains_key("dcc.a") {
            let a = take(&mut kv, "dcc.a".into())?;
            let b = take(&mut kv, "dcc.b".into())?;
            let mut pbar = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    let v = take(&mut kv, format!("dcc.pbar.{i}.{j}"))?;
                    pbar[(i, j)] = v;
                    pbar[(j, i)] = v;
                }
            }
            Some(DccParams { a, b, pbar })
        } else {
            None
        };
        let dcw = if kv.contains_key(&format!("dcw.a.{}", assets[0])) {
            let mut vecs = Vec::new();
            for name in ["a", "b", "omega_bar", "omega0"] {
                let v = assets.iter().map(|t| take(&mut kv, format!("dcw.{name}.{t}"))).collect::<Result<Vec<_>>>()?;
                vecs.push(DVector::from_vec(v));
            }
            let omega0 = vecs.pop().unwrap();
            let omega_bar = vecs.pop().unwrap();
            let b = vecs.pop().unwrap();
            let a = vecs.pop().unwrap();
            Some(DcwParams { a, b, omega_bar, omega0 })
        } else {
            None
        };
        if let Some(k) = kv.keys().next() {
            return Err(Error::Parse { line: 0, msg: format!("unknown key {k}") });
        }
        Ok(Self { assets, har, dcc, dcw })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_kv())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&std::fs::read_to_string(path)?)
    }
}

fn take(kv: &mut BTreeMap<String, f64>, k: String) -> Result<f64> {
    kv.remove(&k).ok_or_else(|| Error::Parse {
        line: 0,
        msg: format!("missing key {k}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_exact() {
        let p = ModelParams {
            assets: vec!["AAPL".into(), "XOM".into()],
            har: Some(HarParams { alphas: vec![[0.1, 0.2 + 0.1, 1e-17, -3.5], [1.0 / 3.0, 0.0, 0.5, 0.25]] }),
            dcc: Some(DccParams {
                a: 0.123456789012345,
                b: 0.9,
                pbar: DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]),
            }),
            dcw: Some(DcwParams {
                a: DVector::from_vec(vec![0.17, -0.01]),
                b: DVector::from_vec(vec![0.78, 0.999]),
                omega_bar: DVector::from_vec(vec![0.6, 0.4]),
                omega0: DVector::from_vec(vec![0.6, 0.4]),
            }),
        };
        let text = p.to_kv();
        assert!(text.contains("alpha0.AAPL=0.1\n"));
        assert!(text.contains("dcc.a="));
        assert_eq!(ModelParams::from_kv(&text).unwrap(), p);
    }

    #[test]
    fn partial_and_unknown_keys() {
        let p = ModelParams { assets: vec!["A".into()], har: None, dcc: None, dcw: None };
        assert_eq!(ModelParams::from_kv(&p.to_kv()).unwrap(), p);
        assert!(ModelParams::from_kv("assets=A\nfoo=1\n").is_err());
    }
}
