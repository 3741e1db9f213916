//! Brute-force reference solver for small problems, used to cross-check the
//! active-set method in tests.

use nalgebra::{DMatrix, DVector};

use super::{min_variance, ExposureConstraint};
use crate::{Error, Result};

const REFINE_STEPS: usize = 200;

fn objective(q: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    (q * w).dot(w)
}

/// Minimizes a convex function on `[lo, hi]`: grid search with spacing
/// `step`, then ternary search inside the best cell.
fn line_search(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let at = |k: usize| if k >= n { hi } else { lo + k as f64 * step };
    let mut best = 0;
    let mut best_val = f(lo);
    for k in 1..=n {
        let v = f(at(k));
        if v < best_val {
            best_val = v;
            best = k;
        }
    }
    let mut a = if best == 0 { lo } else { at(best - 1) };
    let mut b = at((best + 1).min(n));
    for _ in 0..REFINE_STEPS {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) <= f(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let x = 0.5 * (a + b);
    if f(x) <= best_val {
        x
    } else {
        at(best)
    }
}

/// Grid-search minimum-variance weights for `M <= 3` under an exposure bound.
///
/// For M = 2 the feasible set is the segment `w = (t, 1 - t)` with
/// `|t| + |1 - t| <= EC`; for M = 3 the outer grid runs over `w_1` and the
/// inner minimization over `w_2` is solved exactly on its feasible interval.
pub fn qp_oracle(omega: &DMatrix<f64>, ec: ExposureConstraint, step: f64) -> Result<DVector<f64>> {
    let m = omega.nrows();
    if m > 3 {
        return Err(Error::Unsupported(format!("grid oracle handles at most 3 assets, got {m}")));
    }
    if m == 0 || !(step > 0.0) {
        return Err(Error::InvalidParameter("oracle needs assets and a positive step".into()));
    }
    let ec = match ec {
        ExposureConstraint::Unbounded => return Ok(min_variance(omega)?.weights),
        ExposureConstraint::Bounded(v) => v,
    };
    let half = (ec - 1.0) / 2.0;
    match m {
        1 => Ok(DVector::from_element(1, 1.0)),
        2 => {
            let f = |t: f64| objective(omega, &DVector::from_vec(vec![t, 1.0 - t]));
            let t = line_search(&f, -half, 1.0 + half, step);
            Ok(DVector::from_vec(vec![t, 1.0 - t]))
        }
        _ => {
            let inner = |x: f64| -> DVector<f64> {
                let budget = (ec - x.abs() - (1.0 - x).abs()).max(0.0);
                let lo = (1.0 - x).min(0.0) - budget / 2.0;
                let hi = (1.0 - x).max(0.0) + budget / 2.0;
                let base = DVector::from_vec(vec![x, 0.0, 1.0 - x]);
                let d = DVector::from_vec(vec![0.0, 1.0, -1.0]);
                let curv = objective(omega, &d);
                let slope = (omega * &base).dot(&d);
                let y = if curv > 0.0 { (-slope / curv).clamp(lo, hi) } else if slope > 0.0 { lo } else { hi };
                base + d * y
            };
            let g = |x: f64| objective(omega, &inner(x));
            let x = line_search(&g, -half, 1.0 + half, step);
            Ok(inner(x))
        }
    }
}
