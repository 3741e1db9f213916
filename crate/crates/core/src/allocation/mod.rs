//! Portfolio weights from covariance forecasts under the budget constraint
//! `sum w = 1` and an optional gross-exposure bound `sum |w| <= EC`.

mod oracle;
mod qp;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use oracle::qp_oracle;
pub use qp::{ActiveSet, QP_CONSTRAINT_TOL, QP_KKT_TOL, QP_MAX_ITER};

use crate::linalg::{l1_norm, ones, quad_form, solve_symmetric};
use crate::{Error, Result};

/// Gross exposure limit; `Unbounded` leaves only the budget constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExposureConstraint {
    Bounded(f64),
    Unbounded,
}

impl ExposureConstraint {
    /// Grid used by default in backtests.
    pub const GRID: [ExposureConstraint; 6] = [
        ExposureConstraint::Bounded(1.0),
        ExposureConstraint::Bounded(1.25),
        ExposureConstraint::Bounded(1.5),
        ExposureConstraint::Bounded(1.75),
        ExposureConstraint::Bounded(2.0),
        ExposureConstraint::Unbounded,
    ];

    /// Infinite values map to `Unbounded`; values below one are infeasible.
    pub fn new(ec: f64) -> Result<Self> {
        if ec.is_nan() || ec < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "exposure constraint must be at least 1, got {ec}"
            )));
        }
        Ok(if ec.is_infinite() {
            ExposureConstraint::Unbounded
        } else {
            ExposureConstraint::Bounded(ec)
        })
    }

    pub fn limit(self) -> f64 {
        match self {
            ExposureConstraint::Bounded(v) => v,
            ExposureConstraint::Unbounded => f64::INFINITY,
        }
    }

    /// Short label used in report rows, e.g. `1.25` or `inf`.
    pub fn label(self) -> String {
        match self {
            ExposureConstraint::Bounded(v) => format!("{v:.2}"),
            ExposureConstraint::Unbounded => "inf".into(),
        }
    }
}

impl fmt::Display for ExposureConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for ExposureConstraint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExposureConstraint::Bounded(v) => s.serialize_f64(*v),
            ExposureConstraint::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExposureConstraint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let v = match Raw::deserialize(d)? {
            Raw::Num(v) => v,
            Raw::Text(s) if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity" | "unbounded") => f64::INFINITY,
            Raw::Text(s) => s.parse::<f64>().map_err(serde::de::Error::custom)?,
        };
        ExposureConstraint::new(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub weights: DVector<f64>,
    /// `w' Omega w` (plus the linear term for projections).
    pub objective: f64,
    /// Whether the exposure bound is active at the solution.
    pub binding: bool,
    pub iterations: usize,
    /// Final working set, reusable as a warm start.
    pub active_set: Option<ActiveSet>,
}

/// Closed-form minimum-variance weights `Omega^-1 i / (i' Omega^-1 i)`.
pub fn min_variance(omega: &DMatrix<f64>) -> Result<AllocationResult> {
    let m = omega.nrows();
    if m == 0 || omega.ncols() != m {
        return Err(Error::InvalidParameter("covariance forecast must be square and non-empty".into()));
    }
    let x = solve_symmetric(omega, &ones(m)).ok_or_else(|| Error::Singular("covariance forecast".into()))?;
    let denom = x.sum();
    if !(denom.abs() > 0.0) || !denom.is_finite() {
        return Err(Error::Singular(format!("i' Omega^-1 i = {denom:e}")));
    }
    Ok(AllocationResult {
        weights: x / denom,
        objective: 1.0 / denom,
        binding: false,
        iterations: 0,
        active_set: None,
    })
}

/// Minimum variance subject to `sum w = 1` and `sum |w| <= EC`.
pub fn constrained_min_variance(omega: &DMatrix<f64>, ec: ExposureConstraint) -> Result<AllocationResult> {
    constrained_min_variance_warm(omega, ec, None)
}

/// As [`constrained_min_variance`], starting the active-set search from a
/// previous working set when it is still usable. The result does not depend
/// on the warm start.
pub fn constrained_min_variance_warm(
    omega: &DMatrix<f64>,
    ec: ExposureConstraint,
    warm: Option<&ActiveSet>,
) -> Result<AllocationResult> {
    let unconstrained = min_variance(omega);
    let limit = ec.limit();
    if let Ok(r) = &unconstrained {
        if l1_norm(&r.weights) <= limit + QP_CONSTRAINT_TOL {
            return unconstrained;
        }
    }
    if limit.is_infinite() {
        return unconstrained;
    }
    let m = omega.nrows();
    let scale = (omega.trace() / m as f64).abs().max(f64::MIN_POSITIVE);
    let mut r = qp::solve(omega, None, limit, scale, warm)?;
    r.objective = quad_form(omega, &r.weights);
    Ok(r)
}

/// Euclidean projection of `target` onto `{w : sum w = 1, sum |w| <= EC}`.
pub fn project_to_constraint(
    target: &DVector<f64>,
    ec: ExposureConstraint,
    warm: Option<&ActiveSet>,
) -> Result<AllocationResult> {
    let m = target.len();
    if m == 0 {
        return Err(Error::InvalidParameter("empty weight vector".into()));
    }
    let limit = ec.limit();
    if (target.sum() - 1.0).abs() <= QP_CONSTRAINT_TOL && l1_norm(target) <= limit + QP_CONSTRAINT_TOL {
        return Ok(AllocationResult {
            weights: target.clone(),
            objective: 0.0,
            binding: false,
            iterations: 0,
            active_set: None,
        });
    }
    let id = DMatrix::identity(m, m);
    let c = -2.0 * target;
    let mut r = qp::solve(&id, Some(&c), limit, 1.0, warm)?;
    r.objective = (&r.weights - target).norm_squared();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: f64, b: f64, c: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, b, c])
    }

    #[test]
    fn closed_form_examples() {
        let r = min_variance(&DMatrix::identity(3, 3)).unwrap();
        assert!(r.weights.iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));
        let r = min_variance(&m2(1.0, 0.0, 3.0)).unwrap();
        assert!((r.weights[0] - 0.75).abs() < 1e-15);
        let q = m2(1.0, 0.8, 0.7);
        let r = min_variance(&q).unwrap();
        assert!((r.objective - quad_form(&q, &r.weights)).abs() <= 1e-12 * r.objective);
    }

    #[test]
    fn exposure_examples() {
        let q = m2(1.0, 0.8, 0.7);
        let r = constrained_min_variance(&q, ExposureConstraint::Unbounded).unwrap();
        assert!((r.weights[0] + 1.0).abs() < 1e-12 && (r.weights[1] - 2.0).abs() < 1e-12);
        assert!(!r.binding);

        let r = constrained_min_variance(&q, ExposureConstraint::Bounded(1.0)).unwrap();
        assert!(r.weights[0].abs() < 1e-9 && (r.weights[1] - 1.0).abs() < 1e-9);
        assert!((r.objective - 0.7).abs() < 1e-9);

        let r = constrained_min_variance(&q, ExposureConstraint::Bounded(2.0)).unwrap();
        assert!(r.binding);
        assert!(r.weights[0] < 0.0);
        assert!((l1_norm(&r.weights) - 2.0).abs() < 1e-9);
        // on the binding face w = (-0.5, 1.5)
        assert!((r.weights[0] + 0.5).abs() < 1e-8);
    }

    #[test]
    fn rejects_small_ec() {
        assert!(ExposureConstraint::new(0.99).is_err());
        assert_eq!(ExposureConstraint::new(f64::INFINITY).unwrap(), ExposureConstraint::Unbounded);
    }

    #[test]
    fn projection_clips_exposure() {
        let t = DVector::from_vec(vec![-1.0, 2.0]);
        let r = project_to_constraint(&t, ExposureConstraint::Bounded(1.0), None).unwrap();
        assert!(r.weights[0].abs() < 1e-9 && (r.weights[1] - 1.0).abs() < 1e-9);
        let r = project_to_constraint(&t, ExposureConstraint::Bounded(2.0), None).unwrap();
        assert!((r.weights[0] + 0.5).abs() < 1e-9 && (r.weights[1] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn ec_serde() {
        #[derive(Deserialize)]
        struct W {
            g: Vec<ExposureConstraint>,
        }
        let w: W = toml::from_str("g = [1.0, 1.25, inf, \"inf\"]").unwrap();
        assert_eq!(w.g[1], ExposureConstraint::Bounded(1.25));
        assert_eq!(w.g[2], ExposureConstraint::Unbounded);
        assert_eq!(w.g[3], ExposureConstraint::Unbounded);
        assert!(toml::from_str::<W>("g = [0.5]").is_err());
    }
}
