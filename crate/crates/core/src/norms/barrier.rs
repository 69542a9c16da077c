//! Primal-dual interior-point method for separable concave maximization over a
//! packing polytope:
//!
//! `max Σ_i φ_i(κ_i)  s.t.  Σ_{i∈A_r} κ_i ≤ b_r,  κ ≥ 0`.
//!
//! Used for the κ-form of `Ω_p` and of its proximal operator on functions
//! that are not submodular.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::setfn::SubsetMask;

/// A smooth concave scalar function on `κ > 0`.
pub trait Concave1d {
    /// Value, first and second derivative at `κ > 0`.
    fn eval(&self, k: f64) -> (f64, f64, f64);
}

/// `c κ^{1/q}`.
#[derive(Clone, Copy, Debug)]
pub struct PowerTerm {
    pub c: f64,
    pub inv_q: f64,
}

impl Concave1d for PowerTerm {
    fn eval(&self, k: f64) -> (f64, f64, f64) {
        let a = self.inv_q;
        if a == 1.0 {
            return (self.c * k, self.c, 0.0);
        }
        let v = self.c * k.powf(a);
        (v, a * v / k, a * (a - 1.0) * v / (k * k))
    }
}

/// `ψ(κ) = λ|z| r − ½λ² r²` for `r = κ^{1/q} < |z|/λ`, `½z²` beyond.
#[derive(Clone, Copy, Debug)]
pub struct ProxTerm {
    pub z: f64,
    pub lambda: f64,
    pub inv_q: f64,
}

impl Concave1d for ProxTerm {
    fn eval(&self, k: f64) -> (f64, f64, f64) {
        let (z, l, a) = (self.z.abs(), self.lambda, self.inv_q);
        let r = k.powf(a);
        if l * r >= z {
            return (0.5 * z * z, 0.0, 0.0);
        }
        let (dr, ddr) = if a == 1.0 { (1.0, 0.0) } else { (a * r / k, a * (a - 1.0) * r / (k * k)) };
        let v = l * z * r - 0.5 * l * l * r * r;
        let dv = l * z - l * l * r;
        (v, dv * dr, -l * l * dr * dr + dv * ddr)
    }
}

#[derive(Clone, Debug)]
pub struct BarrierSolution {
    pub kappa: Vec<f64>,
    pub value: f64,
    /// Multipliers of the rows.
    pub duals: Vec<f64>,
    /// Final complementarity gap.
    pub gap: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct BarrierOptions {
    /// Stop when the complementarity gap is below `rel_gap · max(1, |value|)`.
    pub rel_gap: f64,
    pub max_iter: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions { rel_gap: 1e-12, max_iter: 500 }
    }
}

/// Solves the problem with rows given as masks over `0..k` and positive
/// right-hand sides, by a primal-dual interior-point method.
pub fn maximize<T: Concave1d>(
    terms: &[T],
    rows: &[SubsetMask],
    rhs: &[f64],
    opts: &BarrierOptions,
) -> Result<BarrierSolution> {
    let k = terms.len();
    let r = rows.len();
    if rhs.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::InvalidArgument("barrier rows need positive right-hand sides".into()));
    }
    let members: Vec<Vec<usize>> = rows.iter().map(|m| m.to_indices()).collect();
    let k0 = 0.5 * rows.iter().zip(rhs).map(|(m, b)| b / m.len() as f64).fold(f64::INFINITY, f64::min);
    let k0 = if k0.is_finite() { k0 } else { 1.0 };
    let row_sum = |x: &[f64], mem: &[usize]| mem.iter().map(|&i| x[i]).sum::<f64>();
    let objective = |x: &[f64]| -> f64 { terms.iter().zip(x).map(|(t, &xi)| t.eval(xi).0).sum() };

    // κ, row slacks s, row multipliers δ, bound multipliers μ
    let mut x = vec![k0; k];
    let mut s: Vec<f64> = members.iter().zip(rhs).map(|(m, b)| b - row_sum(&x, m)).collect();
    let scale = terms.iter().zip(&x).map(|(t, &xi)| t.eval(xi).1.abs()).fold(1.0, f64::max);
    let mut delta = vec![scale; r];
    let mut mu = vec![scale; k];
    let n = (r + k) as f64;
    for _ in 0..opts.max_iter {
        let mut g = DVector::<f64>::zeros(k);
        let mut h = DMatrix::<f64>::zeros(k, k);
        let mut rd = vec![0.0; k];
        for i in 0..k {
            let (_, d1, d2) = terms[i].eval(x[i]);
            rd[i] = -d1 - mu[i];
            h[(i, i)] = -d2 + mu[i] / x[i];
        }
        for (mem, &dl) in members.iter().zip(&delta) {
            for &i in mem {
                rd[i] += dl;
            }
        }
        let rp: Vec<f64> = members.iter().zip(rhs).zip(&s).map(|((m, b), sv)| row_sum(&x, m) + sv - b).collect();
        let gap = delta.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>()
            + mu.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        let value = objective(&x);
        let dual_scale = terms.iter().zip(&x).map(|(t, &xi)| t.eval(xi).1.abs()).fold(1.0, f64::max);
        let rd_norm = rd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gap <= opts.rel_gap * value.abs().max(1.0) && rd_norm <= 1e-10 * dual_scale {
            return Ok(BarrierSolution { kappa: x, value, duals: delta, gap });
        }
        let target = 0.1 * gap / n;
        for i in 0..k {
            g[i] = -rd[i] + (target / x[i] - mu[i]);
        }
        for (j, mem) in members.iter().enumerate() {
            let dj = delta[j] / s[j];
            let c = target / s[j] - delta[j] + dj * rp[j];
            for &i in mem {
                g[i] -= c;
                for &l in mem {
                    h[(i, l)] += dj;
                }
            }
        }
        let dx = match h.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => h
                .lu()
                .solve(&g)
                .ok_or_else(|| Error::Numerical("singular Newton system in interior-point method".into()))?,
        };
        let dx: Vec<f64> = dx.iter().copied().collect();
        let ds: Vec<f64> = members.iter().zip(&rp).map(|(m, rpj)| -rpj - row_sum(&dx, m)).collect();
        let ddelta: Vec<f64> =
            (0..r).map(|j| target / s[j] - delta[j] - delta[j] / s[j] * ds[j]).collect();
        let dmu: Vec<f64> = (0..k).map(|i| target / x[i] - mu[i] - mu[i] / x[i] * dx[i]).collect();
        let step = |v: &[f64], dv: &[f64]| {
            v.iter().zip(dv).filter(|(_, d)| **d < 0.0).map(|(a, d)| -0.995 * a / d).fold(1.0, f64::min)
        };
        let ap = step(&x, &dx).min(step(&s, &ds));
        let ad = step(&delta, &ddelta).min(step(&mu, &dmu));
        for i in 0..k {
            x[i] += ap * dx[i];
            mu[i] += ad * dmu[i];
        }
        for j in 0..r {
            s[j] += ap * ds[j];
            delta[j] += ad * ddelta[j];
        }
    }
    Err(Error::Numerical("interior-point method exceeded its iteration budget".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_variable_power_problem() {
        // max √κ1 + √κ2 s.t. κ1 + κ2 ≤ 2 → κ = (1, 1), value 2
        let terms = [PowerTerm { c: 1.0, inv_q: 0.5 }; 2];
        let sol = maximize(&terms, &[SubsetMask::from_bits(3)], &[2.0], &Default::default()).unwrap();
        assert!((sol.value - 2.0).abs() < 1e-10, "{sol:?}");
        // stationarity: ½ κ^{-½} = δ
        assert!((sol.duals[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn linear_terms_reach_lp_vertex() {
        // max κ1 + 2κ2 s.t. κ1 ≤ 1, κ1 + κ2 ≤ 1.5 → 3 at (0, 1.5)
        let terms = [PowerTerm { c: 1.0, inv_q: 1.0 }, PowerTerm { c: 2.0, inv_q: 1.0 }];
        let rows = [SubsetMask::from_bits(1), SubsetMask::from_bits(3)];
        let sol = maximize(&terms, &rows, &[1.0, 1.5], &Default::default()).unwrap();
        assert!((sol.value - 3.0).abs() < 1e-10);
    }
}
