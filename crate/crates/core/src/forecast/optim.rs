//! Derivative-free minimization of two-parameter objectives: a coarse grid
//! over the feasible set followed by Nelder–Mead refinement.

use crate::{Error, Result};

const MAX_ITER: usize = 500;
const RESTARTS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: [f64; 2],
    pub value: f64,
    /// Best objective value after the grid stage and after every simplex iteration.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

struct Tracker<'a> {
    objective: &'a dyn Fn([f64; 2]) -> f64,
    feasible: &'a dyn Fn([f64; 2]) -> bool,
    evaluated: Vec<([f64; 2], f64)>,
    best: f64,
}

impl Tracker<'_> {
    fn eval(&mut self, x: [f64; 2]) -> f64 {
        if !(self.feasible)(x) {
            return f64::INFINITY;
        }
        let v = (self.objective)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        self.evaluated.push((x, v));
        if v < self.best {
            self.best = v;
        }
        v
    }
}

/// Minimizes `objective` over the points where `feasible` holds.
///
/// Among all evaluated points within `tie_tol` of the best value the one
/// closest to the origin is returned, so flat objectives resolve to the
/// smallest parameters.
pub fn minimize2(
    objective: &dyn Fn([f64; 2]) -> f64,
    feasible: &dyn Fn([f64; 2]) -> bool,
    grid: &[[f64; 2]],
    step: f64,
    tie_tol: f64,
) -> Result<OptimResult> {
    let mut tr = Tracker {
        objective,
        feasible,
        evaluated: Vec::new(),
        best: f64::INFINITY,
    };
    let mut start = None;
    let mut start_val = f64::INFINITY;
    for &g in grid {
        let v = tr.eval(g);
        if v < start_val {
            start_val = v;
            start = Some(g);
        }
    }
    let mut start = start.ok_or_else(|| Error::Fit("no feasible grid point with a finite objective".into()))?;
    let mut trace = vec![tr.best];
    let mut scale = step;
    for _ in 0..RESTARTS {
        start = nelder_mead(&mut tr, start, scale, &mut trace);
        scale *= 0.1;
    }
    if !tr.best.is_finite() {
        return Err(Error::Fit("objective is not finite anywhere on the search set".into()));
    }
    let best = tr.best;
    let norm = |x: &[f64; 2]| x[0] * x[0] + x[1] * x[1];
    let (x, value) = tr
        .evaluated
        .iter()
        .filter(|(_, v)| *v <= best + tie_tol)
        .min_by(|a, b| norm(&a.0).total_cmp(&norm(&b.0)).then(a.1.total_cmp(&b.1)))
        .copied()
        .unwrap();
    Ok(OptimResult {
        x,
        value,
        trace,
        evaluations: tr.evaluated.len(),
    })
}

fn nelder_mead(tr: &mut Tracker<'_>, x0: [f64; 2], step: f64, trace: &mut Vec<f64>) -> [f64; 2] {
    let mut simplex = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut vals = [tr.eval(simplex[0]), tr.eval(simplex[1]), tr.eval(simplex[2])];
    // keep the simplex non-degenerate if the offset points fall outside
    for k in 1..3 {
        if !vals[k].is_finite() {
            let mut p = x0;
            p[k - 1] -= step;
            simplex[k] = p;
            vals[k] = tr.eval(p);
        }
    }
    for _ in 0..MAX_ITER {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = order.map(|k| simplex[k]);
        vals = order.map(|k| vals[k]);
        trace.push(tr.best);

        let spread = (vals[2] - vals[0]).abs();
        let size = (1..3)
            .map(|k| (simplex[k][0] - simplex[0][0]).abs().max((simplex[k][1] - simplex[0][1]).abs()))
            .fold(0.0, f64::max);
        if size < 1e-10 || (spread.is_finite() && spread <= 1e-15 * (1.0 + vals[0].abs()) && size < 1e-6) {
            break;
        }

        let c = [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let along = |t: f64| [c[0] + t * (simplex[2][0] - c[0]), c[1] + t * (simplex[2][1] - c[1])];
        let xr = along(-1.0);
        let fr = tr.eval(xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = tr.eval(xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let (xc, fc) = if fr < vals[2] {
                let x = along(-0.5);
                (x, tr.eval(x))
            } else {
                let x = along(0.5);
                (x, tr.eval(x))
            };
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        simplex[0][0] + 0.5 * (simplex[k][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[k][1] - simplex[0][1]),
                    ];
                    vals[k] = tr.eval(simplex[k]);
                }
            }
        }
    }
    let mut k = 0;
    for j in 1..3 {
        if vals[j] < vals[k] {
            k = j;
        }
    }
    trace.push(tr.best);
    simplex[k]
}

/// Regular grid over `[lo0, hi0] x [lo1, hi1]` with `n` points per side.
pub fn rect_grid(lo: [f64; 2], hi: [f64; 2], n: usize) -> Vec<[f64; 2]> {
    let n = n.max(2);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let t = |k: usize, d: usize| lo[d] + (hi[d] - lo[d]) * k as f64 / (n - 1) as f64;
            out.push([t(i, 0), t(j, 1)]);
        }
    }
    out
}
