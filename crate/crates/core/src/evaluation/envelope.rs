use serde::{Deserialize, Serialize};

use crate::allocation::ExposureConstraint;

/// Utility line `V(x) = -2 x TO - 50 PV` in bp, with `x = tau/gamma` in bp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeLine {
    pub ec: ExposureConstraint,
    pub pv: f64,
    pub to: f64,
}

impl EnvelopeLine {
    pub fn value(&self, x: f64) -> f64 {
        -2.0 * x * self.to - 0.5 * super::BP_FACTOR * self.pv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub x: f64,
    pub value: f64,
    /// Index into the line set of the maximizing exposure constraint.
    pub argmax: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub x: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub lines: Vec<EnvelopeLine>,
    pub points: Vec<EnvelopePoint>,
    pub breakpoints: Vec<Breakpoint>,
}

impl Envelope {
    pub fn value_at(&self, x: f64) -> f64 {
        self.lines.iter().map(|l| l.value(x)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `0, 0.25, ..., 25` bp.
pub fn envelope_grid() -> Vec<f64> {
    (0..=100).map(|k| k as f64 * 0.25).collect()
}

fn upper(lines: &[EnvelopeLine], x: f64) -> usize {
    // ties resolve to the earliest line, i.e. the smallest EC in grid order
    let mut best = 0;
    for (k, l) in lines.iter().enumerate().skip(1) {
        if l.value(x) > lines[best].value(x) {
            best = k;
        }
    }
    best
}

/// Upper envelope over exposure constraints of one strategy's utility
/// lines, evaluated on `grid` with exact switch points on `[grid0, gridN]`.
pub fn utility_envelope(lines: &[EnvelopeLine], grid: &[f64]) -> Envelope {
    let points = grid
        .iter()
        .map(|&x| {
            let k = upper(lines, x);
            EnvelopePoint { x, value: lines[k].value(x), argmax: k }
        })
        .collect();
    let mut breakpoints = Vec::new();
    if let (Some(&lo), Some(&hi)) = (grid.first(), grid.last()) {
        let mut x = lo;
        // among lines tied at the left end, the flattest one dominates to its right
        let top = lines[upper(lines, lo)].value(lo);
        let mut cur = (0..lines.len())
            .filter(|&k| lines[k].value(lo) == top)
            .min_by(|&a, &b| lines[a].to.total_cmp(&lines[b].to))
            .unwrap();
        loop {
            // the next line to take over has a flatter slope and the nearest crossing
            let mut next: Option<(f64, usize)> = None;
            for (k, l) in lines.iter().enumerate() {
                if l.to >= lines[cur].to {
                    continue;
                }
                let cross = 0.5 * super::BP_FACTOR * (l.pv - lines[cur].pv) / (2.0 * (lines[cur].to - l.to));
                if cross > x && cross <= hi {
                    let better = match next {
                        None => true,
                        Some((nx, nk)) => cross < nx || (cross == nx && lines[k].to < lines[nk].to),
                    };
                    if better {
                        next = Some((cross, k));
                    }
                }
            }
            match next {
                Some((nx, nk)) => {
                    breakpoints.push(Breakpoint { x: nx, from: cur, to: nk });
                    x = nx;
                    cur = nk;
                }
                None => break,
            }
        }
    }
    Envelope {
        lines: lines.to_vec(),
        points,
        breakpoints,
    }
}
