//! Constants of the recovery analysis, the generalized irrepresentability
//! certificate, sampled restricted eigenvalues and the concentration bound
//! on `Ω*(z)` with its Monte-Carlo check.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::envelope::CORE_SET_LIMIT;
use crate::error::{check_len, Error, Result};
use crate::norms::{dual_norm, norm, NormParams};
use crate::par::Exec;
use crate::setfn::{Family, SetFunctionSpec, SubsetMask};
use crate::submod::{smallest_stable_superset, stable_inseparable_sets};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoryConstants {
    /// `min_k F({k})`.
    pub m: f64,
    /// `max_k F({k})`.
    pub big_m: f64,
    /// Smallest positive marginal gain `F(A ∪ {k}) − F(A)`.
    pub m_tilde: f64,
    /// `m̃ / M`.
    pub c: f64,
    /// `min (F(B) − F(A)) / F(B \ A)` over `A ⊂ B` with `F(B) > F(A)`.
    pub rho: f64,
}

/// Exact constants by enumeration (`d ≤ 14`); modular functions take a
/// shortcut at any size.
pub fn constants(f: &SetFunctionSpec) -> Result<TheoryConstants> {
    let d = f.d();
    if matches!(f.family(), Family::Cardinality) && !f.is_minor() {
        return Ok(TheoryConstants { m: 1.0, big_m: 1.0, m_tilde: 1.0, c: 1.0, rho: 1.0 });
    }
    if d > CORE_SET_LIMIT {
        return Err(Error::TooLarge { d, limit: CORE_SET_LIMIT });
    }
    let n = 1usize << d;
    let table: Vec<f64> = (0..n).map(|m| f.value(SubsetMask::from_bits(m as u64))).collect();
    let singles: Vec<f64> = (0..d).map(|k| table[1 << k]).collect();
    let m = singles.iter().cloned().fold(f64::INFINITY, f64::min);
    let big_m = singles.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-12 * table[n - 1].abs().max(1.0);
    let mut m_tilde = f64::INFINITY;
    for a in 0..n {
        if !table[a].is_finite() {
            continue;
        }
        for k in (0..d).filter(|k| a >> k & 1 == 0) {
            let g = table[a | 1 << k] - table[a];
            if g > tol && g < m_tilde {
                m_tilde = g;
            }
        }
    }
    // every pair A ⊂ B, as (B, A ⊆ B) via submask enumeration: 3^d pairs
    let mut rho = 1.0f64;
    for b in 1..n {
        if !table[b].is_finite() {
            continue;
        }
        let mut a = (b - 1) & b;
        loop {
            let (fa, fb, fd) = (table[a], table[b], table[b & !a]);
            if fa.is_finite() && fb > fa + tol && fd.is_finite() && fd > 0.0 {
                rho = rho.min((fb - fa) / fd);
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }
    Ok(TheoryConstants { m, big_m, m_tilde, c: m_tilde / big_m, rho })
}

/// Generalized irrepresentability for a design `Q = XᵀX/n` and target `w*`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryCertificate {
    /// Smallest stable superset of `Supp(w*)`, 1-based.
    pub j: Vec<usize>,
    /// `(Ω^J)*((Ω_J(Q_JJ⁻¹ Q_Jj))_{j∉J})`.
    pub lhs: f64,
    /// Slack `η = 1 − lhs`.
    pub eta: f64,
    /// `λ_min(Q_JJ)`.
    pub kappa: f64,
    /// `min |w*_j|` over the support.
    pub nu: f64,
    /// `κν / (2|J|^{1/p} F(J)^{1−1/p})`.
    pub lambda_threshold: f64,
    pub lambda: Option<f64>,
    pub verdict: String,
}

impl RecoveryCertificate {
    pub fn passes(&self) -> bool {
        self.verdict == "pass"
    }
}

fn sub_matrix(q: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| q[(rows[i], cols[j])])
}

fn check_gram(p: &NormParams, q: &DMatrix<f64>) -> Result<()> {
    check_len(p.d(), q.nrows())?;
    check_len(p.d(), q.ncols())?;
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("Gram matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Evaluates the certificate; `lambda`, when given, is compared with the
/// threshold.
pub fn irrepresentability(
    p: &NormParams,
    q: &DMatrix<f64>,
    w_star: &[f64],
    lambda: Option<f64>,
) -> Result<RecoveryCertificate> {
    check_gram(p, q)?;
    check_len(p.d(), w_star.len())?;
    let f = p.f();
    let supp = SubsetMask::from_indices((0..p.d()).filter(|&i| w_star[i] != 0.0));
    if supp.is_empty() {
        return Err(Error::InvalidArgument("w* has empty support".into()));
    }
    let j = smallest_stable_superset(f, supp)?;
    let jj = j.to_indices();
    let jc: Vec<usize> = (0..p.d()).filter(|&i| !j.contains(i)).collect();
    let nu = supp.iter().map(|i| w_star[i].abs()).fold(f64::INFINITY, f64::min);
    let qjj = sub_matrix(q, &jj, &jj);
    let kappa = qjj.clone().symmetric_eigen().eigenvalues.min();
    let fj = f.value(j);
    let pinv = if p.is_inf() { 0.0 } else { 1.0 / p.p() };
    let threshold = kappa.max(0.0) * nu / (2.0 * (jj.len() as f64).powf(pinv) * fj.powf(1.0 - pinv));
    let mut cert = RecoveryCertificate {
        j: j.to_one_based(),
        lhs: f64::NAN,
        eta: f64::NAN,
        kappa,
        nu,
        lambda_threshold: threshold,
        lambda,
        verdict: String::new(),
    };
    if !(kappa > 1e-12 * qjj.abs().max().max(1.0)) {
        cert.verdict = "fail (κ=0)".into();
        return Ok(cert);
    }
    let lhs = if jc.is_empty() {
        0.0
    } else {
        let inv = qjj.try_inverse().ok_or_else(|| Error::Numerical("Q_JJ is not invertible".into()))?;
        let restricted = p.with_function(f.restrict(j)?);
        let contracted = p.with_function(f.contract(j)?);
        let mut t = Vec::with_capacity(jc.len());
        for &c in &jc {
            let col = DVector::from_iterator(jj.len(), jj.iter().map(|&r| q[(r, c)]));
            let a = &inv * col;
            t.push(norm(&restricted, a.as_slice())?);
        }
        dual_norm(&contracted, &t)?
    };
    cert.lhs = lhs;
    cert.eta = 1.0 - lhs;
    cert.verdict = if cert.eta <= 0.0 {
        "fail (η ≤ 0)".into()
    } else if lambda.is_some_and(|l| l > threshold) {
        "fail (λ above threshold)".into()
    } else {
        "pass".into()
    };
    Ok(cert)
}

/// Sampled estimate of the restricted-eigenvalue constant: an upper bound
/// on the true `κ`, never a certificate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictedEigenvalue {
    pub kappa_hat: f64,
    pub samples: usize,
}

/// `min ΔᵀQΔ / Ω_J(Δ_J)²` over random directions of the cone
/// `Ω^J(Δ_{J^c}) ≤ 3Ω_J(Δ_J)` and over the eigenvectors of `Q` that lie in
/// it.
pub fn restricted_eigenvalue(
    p: &NormParams,
    q: &DMatrix<f64>,
    j: SubsetMask,
    samples: usize,
    seed: u64,
) -> Result<RestrictedEigenvalue> {
    check_gram(p, q)?;
    let d = p.d();
    let f = p.f();
    if j.is_empty() {
        return Err(Error::InvalidArgument("J must be nonempty".into()));
    }
    let jj = j.to_indices();
    let jc: Vec<usize> = (0..d).filter(|&i| !j.contains(i)).collect();
    let restricted = p.with_function(f.restrict(j)?);
    let contracted = if jc.is_empty() { None } else { Some(p.with_function(f.contract(j)?)) };
    let pick = |v: &[f64], idx: &[usize]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let ratio = |delta: &[f64]| -> Result<Option<f64>> {
        let oj = norm(&restricted, &pick(delta, &jj))?;
        if oj <= 0.0 {
            return Ok(None);
        }
        if let Some(c) = &contracted {
            if norm(c, &pick(delta, &jc))? > 3.0 * oj * (1.0 + 1e-12) {
                return Ok(None);
            }
        }
        let dv = DVector::from_column_slice(delta);
        Ok(Some(dv.dot(&(q * &dv)) / (oj * oj)))
    };
    let mut best = f64::INFINITY;
    let mut used = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in 0..samples {
        let mut delta = vec![0.0; d];
        for &i in &jj {
            delta[i] = StandardNormal.sample(&mut rng);
        }
        if let Some(c) = &contracted {
            let oj = norm(&restricted, &pick(&delta, &jj))?;
            let dir: Vec<f64> = jc.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
            let oc = norm(c, &dir)?;
            // radius from 0 to the cone boundary; every fourth sample on it
            let u: f64 = if s % 4 == 0 { 1.0 } else { rand::Rng::random(&mut rng) };
            if oc > 0.0 {
                for (k, &i) in jc.iter().enumerate() {
                    delta[i] = dir[k] * 3.0 * oj * u / oc;
                }
            }
        }
        if let Some(r) = ratio(&delta)? {
            best = best.min(r);
            used += 1;
        }
    }
    let eig = q.clone().symmetric_eigen();
    for k in 0..d {
        let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        for cand in [v.clone(), v.iter().enumerate().map(|(i, x)| if j.contains(i) { *x } else { 0.0 }).collect()] {
            if let Some(r) = ratio(&cand)? {
                best = best.min(r);
                used += 1;
            }
        }
    }
    Ok(RestrictedEigenvalue { kappa_hat: best.max(0.0), samples: used })
}

/// Bounds on `Ω(ŵ − w*)` and on the prediction error, `24λ/(κρ²)` and
/// `36λ²/(κρ²)`.
pub fn consistency_bounds(lambda: f64, kappa: f64, rho: f64) -> (f64, f64) {
    let den = kappa * rho * rho;
    (24.0 * lambda / den, 36.0 * lambda * lambda / den)
}

/// The threshold `t(u)` with `P(Ω*(z) ≥ t(u)) ≤ e^{−u²/2}` for `z` normal
/// with unit-diagonal covariance, over stable inseparable sets `D_F`.
pub fn concentration_bound(p: &NormParams, u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::InvalidArgument(format!("u must be nonnegative, got {u}")));
    }
    let sets = stable_inseparable_sets(p.f())?;
    let inv_q = 1.0 / p.q();
    let ex = (inv_q - 0.5).max(0.0);
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for face in &sets.faces {
        let (n, fa) = (face.set.len() as f64, face.value);
        a = a.max(n.powf(inv_q) / fa.powf(inv_q));
        b = b.max(n.powf(ex) / fa.powf(inv_q));
    }
    let count = sets.faces.len() as f64;
    Ok(4.0 * (p.q() * (2.0 * count).ln()).sqrt() * a + u * b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailEstimate {
    pub threshold: f64,
    pub draws: usize,
    pub exceed: usize,
    pub tail: f64,
    /// `e^{−u²/2}`.
    pub bound: f64,
    /// Binomial standard error at the bound.
    pub se: f64,
}

impl TailEstimate {
    /// Empirical tail within three standard errors of the bound.
    pub fn within_bound(&self) -> bool {
        self.tail <= self.bound + 3.0 * self.se
    }
}

const CHUNK: usize = 4096;

/// Monte-Carlo estimate of `P(Ω*(z) ≥ t(u))` with `z = Lε`, `LLᵀ = Q`
/// (`Q = I` when absent). Chunks have their own seeds, so the result does
/// not depend on `exec`.
pub fn monte_carlo_tail(
    p: &NormParams,
    q: Option<&DMatrix<f64>>,
    u: f64,
    draws: usize,
    seed: u64,
    exec: Exec,
) -> Result<TailEstimate> {
    let d = p.d();
    let chol = match q {
        Some(q) => {
            check_gram(p, q)?;
            if (0..d).any(|i| (q[(i, i)] - 1.0).abs() > 1e-12) {
                return Err(Error::InvalidArgument("covariance must have unit diagonal".into()));
            }
            Some(q.clone().cholesky().ok_or_else(|| Error::InvalidArgument("covariance is not positive definite".into()))?.l())
        }
        None => None,
    };
    let threshold = concentration_bound(p, u)?;
    let chunks = draws.div_ceil(CHUNK);
    let counts = exec.map_range(chunks, |c| -> Result<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::experiment::cell_seed(seed, c, 0x7a11));
        let len = CHUNK.min(draws - c * CHUNK);
        let mut hits = 0;
        for _ in 0..len {
            let e = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let z = match &chol {
                Some(l) => l * e,
                None => e,
            };
            if dual_norm(p, z.as_slice())? >= threshold {
                hits += 1;
            }
        }
        Ok(hits)
    });
    let exceed = counts.into_iter().sum::<Result<usize>>()?;
    let bound = (-u * u / 2.0).exp();
    Ok(TailEstimate {
        threshold,
        draws,
        exceed,
        tail: exceed as f64 / draws as f64,
        bound,
        se: (bound * (1.0 - bound) / draws as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modular_and_indicator_constants() {
        let c = constants(&SetFunctionSpec::cardinality(4).unwrap().materialize().unwrap()).unwrap();
        assert_eq!((c.m, c.big_m, c.m_tilde, c.c, c.rho), (1.0, 1.0, 1.0, 1.0, 1.0));
        let i = constants(&SetFunctionSpec::indicator_nonempty(3).unwrap()).unwrap();
        assert_eq!((i.c, i.rho), (1.0, 1.0));
    }

    #[test]
    fn cardinality_concentration_matches_the_formula() {
        let p = NormParams::new(SetFunctionSpec::cardinality(4).unwrap(), 2.0).unwrap();
        let t = concentration_bound(&p, 1.0).unwrap();
        assert!((t - (4.0 * (2.0 * 8f64.ln()).sqrt() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn identity_design_has_full_slack() {
        let f = SetFunctionSpec::modified_range(5).unwrap();
        let p = NormParams::new(f, 2.0).unwrap();
        let cert = irrepresentability(&p, &DMatrix::identity(5, 5), &[0.0, 1.0, -1.0, 0.0, 0.0], None).unwrap();
        assert_eq!(cert.lhs, 0.0);
        assert_eq!(cert.eta, 1.0);
        assert!(cert.passes());
    }
}
