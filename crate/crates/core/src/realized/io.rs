use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use super::{CovMatrixSeries, CovarianceMatrix};
use crate::{Error, Result};

const ASSET_PREFIX: &str = "# assets:";

/// Writes a series as `date,i,j,value` rows over the upper triangle, preceded
/// by a `# assets: A,B,...` line fixing the asset order.
pub fn write_cov_series(path: impl AsRef<Path>, series: &CovMatrixSeries) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_cov_series_to(&mut w, series)?;
    w.flush()?;
    Ok(())
}

/// As [`write_cov_series`], into any writer.
pub fn write_cov_series_to(w: &mut impl Write, series: &CovMatrixSeries) -> Result<()> {
    writeln!(w, "{ASSET_PREFIX} {}", series.assets().join(","))?;
    writeln!(w, "date,i,j,value")?;
    let m = series.dim();
    for s in series.matrices() {
        for i in 0..m {
            for j in i..m {
                writeln!(w, "{},{},{},{:?}", s.date, i, j, s.values[(i, j)])?;
            }
        }
    }
    Ok(())
}

/// Loads a series written by [`write_cov_series`]. When `expected_assets` is
/// given the header ordering must match it exactly.
pub fn load_cov_series(path: impl AsRef<Path>, expected_assets: Option<&[String]>) -> Result<CovMatrixSeries> {
    let file = std::fs::File::open(path.as_ref())?;
    let mut lines = BufReader::new(file).lines();
    let first = lines.next().transpose()?.ok_or_else(|| Error::EmptyInput("covariance file".into()))?;
    let assets: Vec<String> = first
        .strip_prefix(ASSET_PREFIX)
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("expected `{ASSET_PREFIX} ...` header"),
        })?
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if assets.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "no assets in header".into(),
        });
    }
    if let Some(exp) = expected_assets {
        if exp != assets.as_slice() {
            return Err(Error::Metadata(format!(
                "asset ordering {assets:?} does not match expected {exp:?}"
            )));
        }
    }
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "date,i,j,value" {
        return Err(Error::Parse {
            line: 2,
            msg: "expected header `date,i,j,value`".into(),
        });
    }
    let m = assets.len();
    let mut out: Vec<(NaiveDate, DMatrix<f64>, usize)> = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k as u64 + 3;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: lineno, msg };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", f.len())));
        }
        let date: NaiveDate = f[0].parse().map_err(|e| bad(format!("date: {e}")))?;
        let i: usize = f[1].parse().map_err(|e| bad(format!("i: {e}")))?;
        let j: usize = f[2].parse().map_err(|e| bad(format!("j: {e}")))?;
        let v: f64 = f[3].parse().map_err(|e| bad(format!("value: {e}")))?;
        if i >= m || j >= m || i > j {
            return Err(bad(format!("index ({i},{j}) outside the upper triangle of {m} assets")));
        }
        if !v.is_finite() {
            return Err(bad("non-finite value".into()));
        }
        if out.last().is_none_or(|(d, _, _)| *d != date) {
            out.push((date, DMatrix::from_element(m, m, f64::NAN), 0));
        }
        let (_, mat, count) = out.last_mut().unwrap();
        mat[(i, j)] = v;
        mat[(j, i)] = v;
        *count += 1;
    }
    let need = m * (m + 1) / 2;
    let mut matrices = Vec::with_capacity(out.len());
    for (date, mat, count) in out {
        if count != need || mat.iter().any(|v| v.is_nan()) {
            return Err(Error::Misaligned(format!("incomplete matrix on {date}")));
        }
        matrices.push(CovarianceMatrix::new(date, mat));
    }
    if matrices.is_empty() {
        return Err(Error::EmptyInput(format!("no matrices in {}", path.as_ref().display())));
    }
    CovMatrixSeries::new(assets, matrices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let d1 = NaiveDate::from_ymd_opt(2015, 1, 2).unwrap();
        let d2 = NaiveDate::from_ymd_opt(2015, 1, 5).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.1 + 0.2, 1.0 / 3.0, 1.0 / 3.0, 7e-300]);
        let b = DMatrix::from_row_slice(2, 2, &[2.0, -0.5, -0.5, 1.0]);
        let s = CovMatrixSeries::new(
            vec!["AAA".into(), "BBB".into()],
            vec![CovarianceMatrix::new(d1, a), CovarianceMatrix::new(d2, b)],
        )
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_cov_series(f.path(), &s).unwrap();
        let back = load_cov_series(f.path(), None).unwrap();
        assert_eq!(back, s);
        let wrong = vec!["BBB".to_string(), "AAA".to_string()];
        assert!(matches!(load_cov_series(f.path(), Some(&wrong)), Err(Error::Metadata(_))));
    }
}
