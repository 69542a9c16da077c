//! `Ω_p` for arbitrary `F` through its κ-form
//!
//! `Ω_p(w) = max Σ_i |w_i| κ_i^{1/q}  s.t.  κ(A) ≤ F(A), κ ≥ 0`,
//!
//! a linear program for `p = ∞` and a smooth concave program otherwise. The
//! row multipliers `δ_A` give the latent decomposition
//! `v^A_i = w_i δ_A / Σ_{B∋i} δ_B`.

use super::barrier::{self, BarrierOptions, PowerTerm};
use super::{check_vector, NormParams};
use crate::envelope::{core_set, CORE_SET_LIMIT};
use crate::error::{Error, Result};
use crate::lp;
use crate::setfn::SubsetMask;

/// Which sets enter the program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Supports {
    /// The core set of `F`; the other constraints are implied.
    #[default]
    CoreSet,
    /// Every finite-valued nonempty set.
    All,
}

/// Multipliers below this fraction of the largest are treated as zero.
const DELTA_FLOOR: f64 = 1e-9;

/// `Ω_p` with its constraint rows prepared once (`d ≤ 14`).
#[derive(Clone, Debug)]
pub struct LpNorm {
    params: NormParams,
    rows: Vec<(SubsetMask, f64)>,
}

/// One term `v^A` of a latent decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    /// `A` intersected with the support of `w`.
    pub set: SubsetMask,
    /// `F(A)`, minimal over sets with the same trace on the support.
    pub cost: f64,
    /// Multiplier `δ_A` of the constraint on `A`.
    pub delta: f64,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentDecomposition {
    pub components: Vec<Component>,
    /// `Σ_A F(A)^{1/q} ‖v^A‖_p`.
    pub objective: f64,
}

impl LatentDecomposition {
    pub fn sum(&self, d: usize) -> Vec<f64> {
        let mut s = vec![0.0; d];
        for c in &self.components {
            for (x, v) in s.iter_mut().zip(&c.v) {
                *x += v;
            }
        }
        s
    }
}

struct Solved {
    value: f64,
    supp: Vec<usize>,
    rows: Vec<(u64, f64)>,
    delta: Vec<f64>,
}

impl LpNorm {
    pub fn new(params: &NormParams, supports: Supports) -> Result<Self> {
        let d = params.d();
        if d > CORE_SET_LIMIT {
            return Err(Error::TooLarge { d, limit: CORE_SET_LIMIT });
        }
        let f = params.f();
        let rows = match supports {
            Supports::CoreSet => core_set(f)?.constraints(),
            Supports::All => (1..1u64 << d)
                .map(SubsetMask::from_bits)
                .map(|a| (a, f.value(a)))
                .filter(|(_, v)| v.is_finite())
                .collect(),
        };
        Ok(LpNorm { params: params.clone(), rows })
    }

    pub fn params(&self) -> &NormParams {
        &self.params
    }

    pub fn rows(&self) -> &[(SubsetMask, f64)] {
        &self.rows
    }

    pub fn norm(&self, w: &[f64]) -> Result<f64> {
        check_vector(&self.params, w)?;
        Ok(self.solve(w)?.map_or(0.0, |s| s.value))
    }

    pub fn latent(&self, w: &[f64]) -> Result<LatentDecomposition> {
        check_vector(&self.params, w)?;
        let Some(s) = self.solve(w)? else {
            return Ok(LatentDecomposition { components: vec![], objective: 0.0 });
        };
        if s.value.is_infinite() {
            return Err(Error::InvalidArgument("Ω(w) is infinite, no latent decomposition exists".into()));
        }
        let top = s.delta.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..s.rows.len()).filter(|&r| s.delta[r] > DELTA_FLOOR * top).collect();
        let mut cover = vec![0.0; s.supp.len()];
        for &r in &keep {
            for (j, c) in cover.iter_mut().enumerate() {
                if s.rows[r].0 >> j & 1 == 1 {
                    *c += s.delta[r];
                }
            }
        }
        if cover.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::Numerical("multipliers do not cover the support".into()));
        }
        let p = self.params.p();
        let mut objective = 0.0;
        let components = keep
            .iter()
            .map(|&r| {
                let (bits, cost) = s.rows[r];
                let mut v = vec![0.0; w.len()];
                let mut set = SubsetMask::EMPTY;
                for (j, &i) in s.supp.iter().enumerate() {
                    if bits >> j & 1 == 1 {
                        v[i] = w[i] * s.delta[r] / cover[j];
                        set.insert(i);
                    }
                }
                objective += self.params.root(cost) * super::lp_norm(&v, p);
                Component { set, cost, delta: s.delta[r], v }
            })
            .collect();
        Ok(LatentDecomposition { components, objective })
    }

    fn solve(&self, w: &[f64]) -> Result<Option<Solved>> {
        let mut supp: Vec<usize> = (0..w.len()).filter(|&i| w[i] != 0.0).collect();
        if supp.is_empty() {
            return Ok(None);
        }
        // coordinates inside a zero-cost set carry κ_i = 0
        let pinned = self
            .rows
            .iter()
            .filter(|(_, b)| *b <= 0.0)
            .fold(SubsetMask::EMPTY, |acc, (a, _)| acc | *a);
        supp.retain(|&i| !pinned.contains(i));
        let rows = project(&self.rows, &supp);
        let covered = rows.iter().fold(0u64, |acc, (b, _)| acc | b);
        if supp.is_empty() {
            return Ok(Some(Solved { value: 0.0, supp, rows, delta: vec![] }));
        }
        if covered != (1u64 << supp.len()) - 1 {
            return Ok(Some(Solved { value: f64::INFINITY, supp, rows, delta: vec![] }));
        }
        let c: Vec<f64> = supp.iter().map(|&i| w[i].abs()).collect();
        let k = supp.len();
        if self.params.is_inf() {
            let mut a = vec![0.0; rows.len() * k];
            for (r, (bits, _)) in rows.iter().enumerate() {
                for j in 0..k {
                    if bits >> j & 1 == 1 {
                        a[r * k + j] = 1.0;
                    }
                }
            }
            let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let sol = lp::maximize(&a, &b, &c)?
                .solution()
                .ok_or_else(|| Error::Numerical("covered κ-program reported unbounded".into()))?;
            return Ok(Some(Solved { value: sol.value, supp, rows, delta: sol.y }));
        }
        let inv_q = 1.0 / self.params.q();
        let terms: Vec<PowerTerm> = c.iter().map(|&c| PowerTerm { c, inv_q }).collect();
        let masks: Vec<SubsetMask> = rows.iter().map(|r| SubsetMask::from_bits(r.0)).collect();
        let rhs: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let sol = barrier::maximize(&terms, &masks, &rhs, &BarrierOptions::default())?;
        Ok(Some(Solved { value: sol.value, supp, rows, delta: sol.duals }))
    }
}

/// Traces of the rows on `supp` (local bit `j` is `supp[j]`), keeping the
/// cheapest right-hand side per trace and dropping traces implied by a
/// cheaper superset trace.
pub(super) fn project(rows: &[(SubsetMask, f64)], supp: &[usize]) -> Vec<(u64, f64)> {
    let k = supp.len();
    let mut best = vec![f64::INFINITY; 1 << k];
    for (a, b) in rows {
        let bits = supp.iter().enumerate().filter(|(_, &i)| a.contains(i)).fold(0u64, |m, (j, _)| m | 1 << j);
        if bits != 0 && *b < best[bits as usize] {
            best[bits as usize] = *b;
        }
    }
    // sup[m] = min over strict supersets
    let mut sup = vec![f64::INFINITY; 1 << k];
    let mut within = best.clone();
    for j in 0..k {
        for m in 0..1usize << k {
            if m >> j & 1 == 0 {
                within[m] = within[m].min(within[m | 1 << j]);
            }
        }
    }
    for m in 0..1usize << k {
        for j in 0..k {
            if m >> j & 1 == 0 {
                sup[m] = sup[m].min(within[m | 1 << j]);
            }
        }
    }
    (1..1usize << k)
        .filter(|&m| best[m].is_finite() && best[m] < sup[m])
        .map(|m| (m as u64, best[m]))
        .collect()
}

/// `Ω_p(w)` by the κ-form over the core set of `F` (`d ≤ 14`).
pub fn norm_lp(p: &NormParams, w: &[f64]) -> Result<f64> {
    LpNorm::new(p, Supports::CoreSet)?.norm(w)
}

/// Optimal latent vectors `v^A` with `Σ v^A = w`, supported on core sets.
pub fn latent_decomposition(p: &NormParams, w: &[f64]) -> Result<LatentDecomposition> {
    LpNorm::new(p, Supports::CoreSet)?.latent(w)
}
