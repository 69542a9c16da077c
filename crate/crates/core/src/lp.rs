//! Dense simplex for `max cᵀx  s.t.  Ax ≤ b, x ≥ 0` with `b ≥ 0`, so the
//! slack basis is feasible and no phase one is needed.
//!
//! The tableau is kept in dictionary form without explicit slack columns:
//! `x_B = b − T x_N`, `z = z₀ + cᵀ x_N`. Pricing is Dantzig's rule until a
//! run of degenerate pivots, then Bland's rule, which cannot cycle.

use crate::error::{Error, Result};

/// Feasibility / optimality tolerance.
pub const TOL: f64 = 1e-9;

const DEGENERATE_RUN: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    /// Primal optimum.
    pub x: Vec<f64>,
    /// Optimal multipliers of the rows (`y ≥ 0`, `Aᵀy ≥ c`, `bᵀy = value`).
    pub y: Vec<f64>,
    pub pivots: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Unbounded,
}

impl LpOutcome {
    /// Optimal value, `+∞` when unbounded.
    pub fn value(&self) -> f64 {
        match self {
            LpOutcome::Optimal(s) => s.value,
            LpOutcome::Unbounded => f64::INFINITY,
        }
    }

    pub fn solution(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            LpOutcome::Unbounded => None,
        }
    }
}

/// Solves the packing-form LP; `a` is `m × n` row-major.
pub fn maximize(a: &[f64], b: &[f64], c: &[f64]) -> Result<LpOutcome> {
    let (m, n) = (b.len(), c.len());
    if a.len() != m * n {
        return Err(Error::DimensionMismatch { expected: m * n, got: a.len() });
    }
    if let Some(bad) = b.iter().find(|&&v| !(v >= -TOL) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("right-hand side {bad} must be finite and nonnegative")));
    }
    let mut t = a.to_vec();
    let mut rhs: Vec<f64> = b.iter().map(|&v| v.max(0.0)).collect();
    let mut obj = c.to_vec();
    let mut z0 = 0.0;
    // labels: 0..n originals, n..n+m slacks
    let mut nonbasic: Vec<usize> = (0..n).collect();
    let mut basic: Vec<usize> = (n..n + m).collect();
    let mut pivots = 0usize;
    let mut degenerate = 0usize;
    let cap = 50 * (m + n) + 1000;
    loop {
        let bland = degenerate >= DEGENERATE_RUN;
        let entering = if bland {
            (0..n).filter(|&j| obj[j] > TOL).min_by_key(|&j| nonbasic[j])
        } else {
            (0..n)
                .filter(|&j| obj[j] > TOL)
                .max_by(|&i, &j| obj[i].total_cmp(&obj[j]).then(nonbasic[j].cmp(&nonbasic[i])))
        };
        let Some(s) = entering else { break };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let p = t[i * n + s];
            if p > TOL {
                let ratio = rhs[i] / p;
                let better = match leave {
                    None => true,
                    Some((r, best)) => {
                        ratio < best - TOL || (ratio <= best + TOL && basic[i] < basic[r])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, ratio)) = leave else {
            return Ok(LpOutcome::Unbounded);
        };
        if ratio <= TOL {
            degenerate += 1;
        } else {
            degenerate = 0;
        }
        pivot(&mut t, &mut rhs, &mut obj, &mut z0, n, r, s);
        std::mem::swap(&mut basic[r], &mut nonbasic[s]);
        pivots += 1;
        if pivots > cap {
            return Err(Error::Numerical(format!("simplex exceeded {cap} pivots")));
        }
    }
    let mut x = vec![0.0; n];
    for (i, &lab) in basic.iter().enumerate() {
        if lab < n {
            x[lab] = rhs[i];
        }
    }
    let mut y = vec![0.0; m];
    for (j, &lab) in nonbasic.iter().enumerate() {
        if lab >= n {
            y[lab - n] = (-obj[j]).max(0.0);
        }
    }
    Ok(LpOutcome::Optimal(LpSolution { value: z0, x, y, pivots }))
}

fn pivot(t: &mut [f64], rhs: &mut [f64], obj: &mut [f64], z0: &mut f64, n: usize, r: usize, s: usize) {
    let m = rhs.len();
    let p = t[r * n + s];
    let inv = 1.0 / p;
    for j in 0..n {
        t[r * n + j] *= inv;
    }
    t[r * n + s] = inv;
    rhs[r] *= inv;
    let (row_r, br) = (t[r * n..(r + 1) * n].to_vec(), rhs[r]);
    for i in 0..m {
        if i == r {
            continue;
        }
        let f = t[i * n + s];
        if f == 0.0 {
            continue;
        }
        let row = &mut t[i * n..(i + 1) * n];
        for j in 0..n {
            row[j] -= f * row_r[j];
        }
        row[s] = -f * inv;
        rhs[i] = (rhs[i] - f * br).max(0.0);
    }
    let f = obj[s];
    for j in 0..n {
        obj[j] -= f * row_r[j];
    }
    obj[s] = -f * inv;
    *z0 += f * br;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6)
        let a = [1.0, 0.0, 0.0, 2.0, 3.0, 2.0];
        let s = maximize(&a, &[4.0, 12.0, 18.0], &[3.0, 5.0]).unwrap().solution().unwrap();
        assert!((s.value - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        // dual: y = (0, 1.5, 1)
        assert!((s.y[0]).abs() < 1e-12 && (s.y[1] - 1.5).abs() < 1e-12 && (s.y[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let out = maximize(&[1.0, -1.0], &[1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_fractional_cover() {
        // pairs of {1,2,3}: max s1+s2+s3 with s_i + s_j ≤ 1 → 3/2
        let a = [1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
        let s = maximize(&a, &[1.0; 3], &[1.0; 3]).unwrap().solution().unwrap();
        assert!((s.value - 1.5).abs() < 1e-12);
        assert!(s.y.iter().all(|&v| (v - 0.5).abs() < 1e-12));
    }
}
