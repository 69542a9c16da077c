//! The norms `Ω_p^F`, their duals, proximal operators, level-set and latent
//! decompositions, and the closed-form comparison penalties.
//!
//! `Ω_p^F` is the gauge whose dual norm is
//! `Ω_p*(s) = max_{A ≠ ∅} ‖s_A‖_q / F(A)^{1/q}` with `1/p + 1/q = 1`.

mod barrier;
mod comparison;
mod decomp;
mod lp_path;
mod lq;
mod prox_generic;

pub use barrier::{BarrierOptions, BarrierSolution, Concave1d, PowerTerm, ProxTerm};
pub use comparison::ComparisonNorm;
pub use decomp::{eta_decomposition, norm_decomposition, prox, prox_decomposition, Level, LevelDecomposition};
pub use lp_path::{latent_decomposition, norm_lp, Component, LatentDecomposition, LpNorm, Supports};
pub use lq::{conjugate, lp_norm, project_l1_ball, project_lq_ball, prox_lp_norm};
pub use prox_generic::{fenchel_certificate, prox_generic, prox_generic_with_certificate, FenchelCertificate};

use std::sync::OnceLock;

use crate::error::{check_len, Error, Result};
use crate::setfn::{exhaustive_guard, Claim, SetFunctionSpec, SubsetMask, EXHAUSTIVE_LIMIT};
use crate::submod::{self, structured_method};

/// Exponent `p ∈ (1, ∞]` bound to a set function.
#[derive(Clone, Debug)]
pub struct NormParams {
    f: SetFunctionSpec,
    p: f64,
    q: f64,
    decomposable: OnceLock<bool>,
}

impl NormParams {
    pub fn new(f: SetFunctionSpec, p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "p must lie in (1, inf], got {p}; use weighted_l1_weights for p = 1"
            )));
        }
        Ok(NormParams { f, p, q: conjugate(p), decomposable: OnceLock::new() })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn f(&self) -> &SetFunctionSpec {
        &self.f
    }

    pub fn d(&self) -> usize {
        self.f.d()
    }

    pub fn is_inf(&self) -> bool {
        self.p.is_infinite()
    }

    /// Same exponent, another function.
    pub fn with_function(&self, f: SetFunctionSpec) -> Self {
        NormParams { f, p: self.p, q: self.q, decomposable: OnceLock::new() }
    }

    /// `F(A)^{1/q}`.
    pub(crate) fn root(&self, fa: f64) -> f64 {
        if self.q == 1.0 {
            fa
        } else {
            fa.powf(1.0 / self.q)
        }
    }

    /// Whether the decomposition algorithms apply; checked once.
    pub fn decomposable(&self) -> bool {
        *self.decomposable.get_or_init(|| {
            (structured_method(&self.f).is_some() && self.f.submodular() == Claim::Yes)
                || (self.f.d() <= EXHAUSTIVE_LIMIT && self.f.is_submodular())
        })
    }
}

/// Parses an exponent: a decimal or `inf`.
pub fn parse_exponent(s: &str) -> Result<f64> {
    let p = match s.trim() {
        "inf" | "Inf" | "infinity" | "∞" => f64::INFINITY,
        other => other
            .parse::<f64>()
            .map_err(|e| Error::InvalidArgument(format!("bad exponent \"{other}\": {e}")))?,
    };
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("p must lie in (1, inf], got {s}")));
    }
    Ok(p)
}

/// Weights `d_k = max_{A ∋ k} F(A)` of the weighted `ℓ_1` norm stated for
/// `p = 1`, over finite values (`d ≤ 20`).
pub fn weighted_l1_weights(f: &SetFunctionSpec) -> Result<Vec<f64>> {
    exhaustive_guard(f.d())?;
    let mut w = vec![0.0f64; f.d()];
    for m in 1u64..1 << f.d() {
        let a = SubsetMask::from_bits(m);
        let v = f.value(a);
        if v.is_finite() {
            for i in a.iter() {
                w[i] = w[i].max(v);
            }
        }
    }
    Ok(w)
}

fn check_vector(p: &NormParams, v: &[f64]) -> Result<()> {
    check_len(p.d(), v.len())?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("vector has non-finite entries".into()));
    }
    Ok(())
}

fn modular_weights(p: &NormParams, s: &[f64]) -> Vec<f64> {
    s.iter().map(|v| if p.q == 1.0 { v.abs() } else { v.abs().powf(p.q) }).collect()
}

/// `Ω_p*(s)`: Dinkelbach iterations when `F` is submodular with a
/// structured oracle, exhaustive maximization for `d ≤ 20` otherwise.
pub fn dual_norm(p: &NormParams, s: &[f64]) -> Result<f64> {
    check_vector(p, s)?;
    if structured_method(&p.f).is_some() && p.f.submodular() == Claim::Yes {
        dual_norm_dinkelbach(p, s)
    } else if p.d() <= EXHAUSTIVE_LIMIT {
        dual_norm_brute(p, s)
    } else {
        Err(Error::Unsupported(format!(
            "dual norm of {} at d = {} needs a structured submodular oracle",
            p.f.family().name(),
            p.d()
        )))
    }
}

/// `max_A ‖s_A‖_q / F(A)^{1/q}` over all nonempty `A` (`d ≤ 20`).
pub fn dual_norm_brute(p: &NormParams, s: &[f64]) -> Result<f64> {
    check_vector(p, s)?;
    exhaustive_guard(p.d())?;
    let t = modular_weights(p, s);
    let n = 1usize << p.d();
    let mut tsum = vec![0.0; n];
    let mut best = 0.0f64;
    for m in 1..n {
        tsum[m] = tsum[m & (m - 1)] + t[m.trailing_zeros() as usize];
        if tsum[m] == 0.0 {
            continue;
        }
        let fa = p.f.value(SubsetMask::from_bits(m as u64));
        let r = if fa == 0.0 { f64::INFINITY } else { tsum[m] / fa };
        best = best.max(r);
    }
    Ok(best.powf(1.0 / p.q))
}

/// Dinkelbach's method for `max_A t(A)/F(A)` with `t_i = |s_i|^q`, one
/// minimization of `F − t/λ` per step.
pub fn dual_norm_dinkelbach(p: &NormParams, s: &[f64]) -> Result<f64> {
    check_vector(p, s)?;
    p.f.require_submodular()?;
    let t = modular_weights(p, s);
    let d = p.d();
    let mut lam = 0.0f64;
    for (i, &ti) in t.iter().enumerate() {
        if ti > 0.0 {
            let fi = p.f.value(SubsetMask::singleton(i));
            lam = lam.max(if fi == 0.0 { f64::INFINITY } else { ti / fi });
        }
    }
    if lam == 0.0 || lam.is_infinite() {
        return Ok(lam);
    }
    let scale = p.f.value(p.f.full()).max(1.0);
    for _ in 0..(10 * d + 100) {
        let scaled: Vec<f64> = t.iter().map(|v| v / lam).collect();
        let r = submod::sfm(&p.f, &scaled)?;
        if r.value >= -1e-13 * scale {
            return Ok(lam.powf(1.0 / p.q));
        }
        let a = r.minimizer;
        let next = a.sum(&t) / p.f.value(a);
        if next <= lam * (1.0 + 1e-10) {
            return Ok(next.max(lam).powf(1.0 / p.q));
        }
        lam = next;
    }
    Err(Error::Numerical("Dinkelbach iterations did not terminate".into()))
}

/// `Ω_p(w)`. Submodular functions use the Lovász extension (`p = ∞`) or the
/// decomposition algorithm; other functions use the latent LP path.
pub fn norm(p: &NormParams, w: &[f64]) -> Result<f64> {
    check_vector(p, w)?;
    if w.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    if p.decomposable() {
        if p.is_inf() {
            let a: Vec<f64> = w.iter().map(|x| x.abs()).collect();
            return submod::lovasz(&p.f, &a);
        }
        return norm_decomposition(p, w);
    }
    norm_lp(p, w)
}
