//! Primal active-set solver for
//! `min w'Qw + c'w  s.t.  sum w = 1, sum |w| <= EC`
//! written over the split `w = u - v`, `u, v >= 0`, `sum (u + v) <= EC`.
//!
//! A small ridge `eps (|u|^2 + |v|^2)` makes the split problem strictly
//! convex, so the solution is unique and equals the minimum-norm optimum on
//! flat faces. With the ridge, `u_i` and `v_i` are never both positive at an
//! optimum, hence `sum (u + v) = sum |w|`.

use nalgebra::{DMatrix, DVector};

use super::AllocationResult;
use crate::{Error, Result};

pub const QP_CONSTRAINT_TOL: f64 = 1e-9;
pub const QP_KKT_TOL: f64 = 1e-8;
pub const QP_MAX_ITER: usize = 500;
const RIDGE: f64 = 1e-10;

/// Working set of an active-set solve: bound-constrained split coordinates
/// (first M entries are `u`, next M are `v`) and the exposure row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet {
    fixed: Vec<bool>,
    exposure: bool,
}

impl ActiveSet {
    pub fn dim(&self) -> usize {
        self.fixed.len() / 2
    }

    pub fn exposure_active(&self) -> bool {
        self.exposure
    }
}

struct Problem<'a> {
    q: &'a DMatrix<f64>,
    g: DVector<f64>,
    ec: f64,
    eps: f64,
    m: usize,
}

impl Problem<'_> {
    fn sign(&self, i: usize) -> f64 {
        if i < self.m {
            1.0
        } else {
            -1.0
        }
    }

    fn h(&self, i: usize, j: usize) -> f64 {
        let v = self.sign(i) * self.sign(j) * self.q[(i % self.m, j % self.m)];
        if i == j {
            v + self.eps
        } else {
            v
        }
    }

    /// Gradient `2Hz + g` of the split objective.
    fn grad(&self, z: &DVector<f64>) -> DVector<f64> {
        let m = self.m;
        let w = DVector::from_fn(m, |i, _| z[i] - z[i + m]);
        let qw = self.q * w;
        DVector::from_fn(2 * m, |i, _| 2.0 * (self.sign(i) * qw[i % m] + self.eps * z[i]) + self.g[i])
    }

    /// Minimizer of the objective with the working-set constraints held as
    /// equalities. Returns the point and the multipliers of the budget row
    /// and, when active, the exposure row.
    fn eqp(&self, ws: &ActiveSet) -> Option<(DVector<f64>, f64, f64)> {
        let n = 2 * self.m;
        let free: Vec<usize> = (0..n).filter(|&i| !ws.fixed[i]).collect();
        let k = free.len();
        if k == 0 {
            return None;
        }
        // with only long legs free the exposure row repeats the budget row
        let degenerate = ws.exposure && free.iter().all(|&i| i < self.m);
        let exposure_row = ws.exposure && !degenerate;
        let rows = 1 + usize::from(exposure_row);
        let dim = k + rows;
        let mut kkt = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                kkt[(a, b)] = 2.0 * self.h(i, j);
            }
            let budget = self.sign(i);
            kkt[(a, k)] = -budget;
            kkt[(k, a)] = budget;
            if exposure_row {
                kkt[(a, k + 1)] = -1.0;
                kkt[(k + 1, a)] = 1.0;
            }
            rhs[a] = -self.g[i];
        }
        rhs[k] = 1.0;
        if exposure_row {
            rhs[k + 1] = self.ec;
        }
        let sol = kkt.lu().solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut z = DVector::zeros(n);
        for (a, &i) in free.iter().enumerate() {
            z[i] = sol[a];
        }
        if degenerate {
            // Only the sum of the two multipliers is pinned down. Pick the
            // exposure multiplier so every fixed short leg stays dual feasible.
            let s = sol[k];
            let grad = self.grad(&z);
            let nu_ec = (self.m..n)
                .filter(|&i| ws.fixed[i])
                .map(|i| 0.5 * (grad[i] + s))
                .fold(0.0_f64, f64::min);
            return Some((z, s - nu_ec, nu_ec));
        }
        let nu_ec = if ws.exposure { sol[k + 1] } else { 0.0 };
        Some((z, sol[k], nu_ec))
    }

    fn feasible(&self, z: &DVector<f64>, ws: &ActiveSet) -> bool {
        let tol = 1e-12 * (1.0 + self.ec);
        (0..z.len()).all(|i| ws.fixed[i] || z[i] >= -tol) && z.sum() <= self.ec + tol
    }

    fn cold_start(&self) -> (DVector<f64>, ActiveSet) {
        let m = self.m;
        // the cheapest single asset, measured by the full objective
        let k = (0..m)
            .min_by(|&a, &b| {
                let fa = self.q[(a, a)] + self.g[a];
                let fb = self.q[(b, b)] + self.g[b];
                fa.total_cmp(&fb)
            })
            .unwrap();
        let mut z = DVector::zeros(2 * m);
        z[k] = 1.0;
        let mut fixed = vec![true; 2 * m];
        fixed[k] = false;
        (z, ActiveSet { fixed, exposure: false })
    }
}

/// Solves the exposure-constrained problem; `c` is the linear term in `w`.
pub(super) fn solve(
    q: &DMatrix<f64>,
    c: Option<&DVector<f64>>,
    ec: f64,
    scale: f64,
    warm: Option<&ActiveSet>,
) -> Result<AllocationResult> {
    let m = q.nrows();
    if q.ncols() != m || m == 0 {
        return Err(Error::InvalidParameter("QP matrix must be square and non-empty".into()));
    }
    if !(ec >= 1.0) || !ec.is_finite() {
        return Err(Error::InvalidParameter(format!("exposure bound {ec} must be finite and at least 1")));
    }
    let g = match c {
        Some(c) => DVector::from_fn(2 * m, |i, _| if i < m { c[i] } else { -c[i - m] }),
        None => DVector::zeros(2 * m),
    };
    let p = Problem {
        q,
        g,
        ec,
        eps: RIDGE * scale,
        m,
    };
    let kkt_tol = QP_KKT_TOL * scale;

    let warm_start = warm.filter(|w| w.dim() == m).and_then(|w| {
        let (z, _, _) = p.eqp(w)?;
        p.feasible(&z, w).then(|| (z.map(|v| v.max(0.0)), w.clone()))
    });
    let (mut z, mut ws) = warm_start.unwrap_or_else(|| p.cold_start());

    let mut iterations = 0;
    loop {
        if iterations >= QP_MAX_ITER {
            return Err(Error::Allocation(format!(
                "active-set solver did not converge in {QP_MAX_ITER} iterations"
            )));
        }
        iterations += 1;
        let (zs, nu_budget, nu_ec) = p
            .eqp(&ws)
            .ok_or_else(|| Error::Allocation("singular working-set system".into()))?;
        let step = &zs - &z;
        if step.amax() <= 1e-13 * (1.0 + z.amax()) {
            z = zs;
            // multipliers of the inequalities in the working set
            let grad = p.grad(&z);
            let mut worst: Option<(f64, Option<usize>)> = None;
            for i in 0..2 * m {
                if ws.fixed[i] {
                    let lambda = grad[i] - nu_budget * p.sign(i) - if ws.exposure { nu_ec } else { 0.0 };
                    if lambda < -kkt_tol && worst.is_none_or(|(w, _)| lambda < w) {
                        worst = Some((lambda, Some(i)));
                    }
                }
            }
            if ws.exposure {
                let lambda = -nu_ec;
                if lambda < -kkt_tol && worst.is_none_or(|(w, _)| lambda < w) {
                    worst = Some((lambda, None));
                }
            }
            match worst {
                None => break,
                Some((_, Some(i))) => ws.fixed[i] = false,
                Some((_, None)) => ws.exposure = false,
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking: Option<Option<usize>> = None;
        for i in 0..2 * m {
            if !ws.fixed[i] && step[i] < 0.0 {
                let ratio = (z[i] / -step[i]).max(0.0);
                if ratio < alpha {
                    alpha = ratio;
                    blocking = Some(Some(i));
                }
            }
        }
        if !ws.exposure {
            let ds = step.sum();
            if ds > 0.0 {
                let ratio = ((ec - z.sum()) / ds).max(0.0);
                if ratio < alpha {
                    alpha = ratio;
                    blocking = Some(None);
                }
            }
        }
        z += alpha * &step;
        match blocking {
            Some(Some(i)) => {
                z[i] = 0.0;
                ws.fixed[i] = true;
            }
            Some(None) => ws.exposure = true,
            None => {}
        }
    }

    // re-solve on the final working set so the answer depends on it alone
    let (z, _, _) = p
        .eqp(&ws)
        .ok_or_else(|| Error::Allocation("singular final working set".into()))?;
    let weights = DVector::from_fn(m, |i, _| z[i] - z[i + m]);
    let budget_gap = (weights.sum() - 1.0).abs();
    let gross: f64 = weights.iter().map(|v| v.abs()).sum();
    if budget_gap > QP_CONSTRAINT_TOL || gross > ec + QP_CONSTRAINT_TOL {
        return Err(Error::Allocation(format!(
            "solution violates constraints (budget gap {budget_gap:e}, gross {gross} vs {ec})"
        )));
    }
    let objective = (q * &weights).dot(&weights);
    Ok(AllocationResult {
        weights,
        objective,
        binding: ws.exposure,
        iterations,
        active_set: Some(ws),
    })
}
