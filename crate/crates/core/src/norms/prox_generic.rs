//! Proximal operator of `λΩ_p` for any `F` and `p`, certified by Fenchel
//! duality.
//!
//! `z − Prox(z)` is the projection of `z` onto `λ{Ω* ≤ 1}`; in the variables
//! `κ_i = |s_i/λ|^q` that projection is a separable concave program over
//! `P_F`, solved by the barrier method. Rows are enumerated for small `d` and
//! generated by submodular minimization otherwise.

use super::barrier::{self, BarrierOptions, ProxTerm};
use super::lp_path::project;
use super::{check_vector, dual_norm, norm, NormParams};
use crate::error::{Error, Result};
use crate::setfn::{Claim, SetFunctionSpec, SubsetMask};
use crate::submod;

/// Largest support handled by full row enumeration.
const ENUMERATE_LIMIT: usize = 16;
const MAX_ROUNDS: usize = 500;
/// Relative tolerance of the certificate.
pub const CERTIFICATE_TOL: f64 = 1e-6;

/// Residuals of the optimality conditions of `w = Prox_{λΩ}(z)`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FenchelCertificate {
    /// `Ω*(z − w)`, at most `λ` at the optimum.
    pub dual_norm: f64,
    /// `(z − w)ᵀw`.
    pub inner: f64,
    /// `λ Ω(w)`, equal to `inner` at the optimum.
    pub penalty: f64,
    pub lambda: f64,
    /// `‖z‖_2²`, the scale of the absolute slack in the alignment test.
    pub scale: f64,
}

impl FenchelCertificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.dual_norm <= self.lambda * (1.0 + tol)
            && self.penalty - self.inner <= tol * self.penalty.max(1e-6 * self.scale)
    }
}

/// Evaluates the certificate for a candidate `w`.
pub fn fenchel_certificate(p: &NormParams, lambda: f64, z: &[f64], w: &[f64]) -> Result<FenchelCertificate> {
    check_vector(p, z)?;
    check_vector(p, w)?;
    let s: Vec<f64> = z.iter().zip(w).map(|(a, b)| a - b).collect();
    Ok(FenchelCertificate {
        dual_norm: dual_norm(p, &s)?,
        inner: s.iter().zip(w).map(|(a, b)| a * b).sum(),
        penalty: lambda * norm(p, w)?,
        lambda,
        scale: z.iter().map(|v| v * v).sum(),
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("λ must be positive and finite, got {lambda}")))
    }
}

/// `Prox_{λΩ_p}(z)`.
pub fn prox_generic(p: &NormParams, lambda: f64, z: &[f64]) -> Result<Vec<f64>> {
    check_vector(p, z)?;
    check_lambda(lambda)?;
    let supp: Vec<usize> = (0..z.len()).filter(|&i| z[i] != 0.0).collect();
    let mut out = vec![0.0; z.len()];
    if supp.is_empty() {
        return Ok(out);
    }
    let inv_q = 1.0 / p.q();
    let terms: Vec<ProxTerm> = supp.iter().map(|&i| ProxTerm { z: z[i], lambda, inv_q }).collect();
    let kappa = if supp.len() <= ENUMERATE_LIMIT && p.d() <= 20 {
        enumerated(p.f(), &supp, &terms)?
    } else if p.f().submodular() == Claim::Yes {
        generated(p.f(), &supp, &terms)?
    } else {
        return Err(Error::Unsupported(format!(
            "prox at support size {} needs a submodular F",
            supp.len()
        )));
    };
    for (j, &i) in supp.iter().enumerate() {
        let r = if inv_q == 1.0 { kappa[j] } else { kappa[j].powf(inv_q) };
        // the interior point stops just short of the cap; snap those to zero
        let m = z[i].abs() - lambda * r;
        out[i] = if m > 1e-9 * z[i].abs() { z[i].signum() * m } else { 0.0 };
    }
    Ok(out)
}

/// The prox and its certificate; fails when the certificate does not hold.
pub fn prox_generic_with_certificate(
    p: &NormParams,
    lambda: f64,
    z: &[f64],
) -> Result<(Vec<f64>, FenchelCertificate)> {
    let w = prox_generic(p, lambda, z)?;
    let cert = fenchel_certificate(p, lambda, z, &w)?;
    if !cert.holds(CERTIFICATE_TOL) {
        return Err(Error::Numerical(format!(
            "prox certificate failed: Ω*(z−w) = {:.3e} vs λ = {:.3e}, (z−w)ᵀw = {:.3e} vs λΩ(w) = {:.3e}",
            cert.dual_norm, cert.lambda, cert.inner, cert.penalty
        )));
    }
    Ok((w, cert))
}

fn solve(terms: &[ProxTerm], rows: &[(SubsetMask, f64)]) -> Result<Vec<f64>> {
    // zero-cost rows pin their coordinates at κ = 0
    let pinned = rows.iter().filter(|r| r.1 <= 0.0).fold(SubsetMask::EMPTY, |a, r| a | r.0);
    let free: Vec<usize> = (0..terms.len()).filter(|&j| !pinned.contains(j)).collect();
    let mut kappa = vec![0.0; terms.len()];
    if free.is_empty() {
        return Ok(kappa);
    }
    let local: Vec<ProxTerm> = free.iter().map(|&j| terms[j]).collect();
    let mut masks = vec![];
    let mut rhs = vec![];
    for (a, b) in rows.iter().filter(|r| r.1 > 0.0) {
        let m = SubsetMask::from_indices(free.iter().enumerate().filter(|(_, &j)| a.contains(j)).map(|(l, _)| l));
        if !m.is_empty() {
            masks.push(m);
            rhs.push(*b);
        }
    }
    let covered = masks.iter().fold(SubsetMask::EMPTY, |a, m| a | *m);
    if covered.len() < free.len() {
        return Err(Error::InvalidArgument("some coordinate lies in no finite-valued set".into()));
    }
    let sol = barrier::maximize(&local, &masks, &rhs, &BarrierOptions::default())?;
    for (l, &j) in free.iter().enumerate() {
        kappa[j] = sol.kappa[l];
    }
    Ok(kappa)
}

fn enumerated(f: &SetFunctionSpec, supp: &[usize], terms: &[ProxTerm]) -> Result<Vec<f64>> {
    let all: Vec<(SubsetMask, f64)> = (1..1u64 << f.d())
        .map(SubsetMask::from_bits)
        .map(|a| (a, f.value(a)))
        .filter(|(_, v)| v.is_finite())
        .collect();
    let rows: Vec<(SubsetMask, f64)> =
        project(&all, supp).into_iter().map(|(b, v)| (SubsetMask::from_bits(b), v)).collect();
    solve(terms, &rows)
}

fn generated(f: &SetFunctionSpec, supp: &[usize], terms: &[ProxTerm]) -> Result<Vec<f64>> {
    let g = f.restrict(SubsetMask::from_indices(supp.iter().copied()))?;
    let k = supp.len();
    let mut rows: Vec<(SubsetMask, f64)> = vec![(g.full(), g.value(g.full()))];
    rows.extend((0..k).map(|j| (SubsetMask::singleton(j), g.value(SubsetMask::singleton(j)))).filter(|r| r.1.is_finite()));
    let scale = g.value(g.full()).abs().max(1.0);
    for _ in 0..MAX_ROUNDS {
        let kappa = solve(terms, &rows)?;
        let r = submod::sfm(&g, &kappa)?;
        if r.value >= -1e-10 * scale || rows.iter().any(|x| x.0 == r.minimizer) {
            return Ok(kappa);
        }
        rows.push((r.minimizer, g.value(r.minimizer)));
    }
    Err(Error::Numerical(format!("row generation did not settle in {MAX_ROUNDS} rounds")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_closed_forms() {
        let ind = NormParams::new(SetFunctionSpec::indicator_nonempty(2).unwrap(), 2.0).unwrap();
        let w = prox_generic(&ind, 2.0, &[3.0, 4.0]).unwrap();
        assert!((w[0] - 1.8).abs() < 1e-6 && (w[1] - 2.4).abs() < 1e-6, "{w:?}");
        let c = NormParams::new(SetFunctionSpec::cardinality(2).unwrap(), 2.0).unwrap();
        let w = prox_generic(&c, 2.0, &[3.0, -1.0]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-6 && w[1].abs() < 1e-6, "{w:?}");
        assert_eq!(prox_generic(&c, 1.0, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn tiny_lambda_is_identity() {
        let f = SetFunctionSpec::range(4).unwrap();
        let np = NormParams::new(f, 3.0).unwrap();
        let z = [0.5, -1.0, 2.0, 0.1];
        let w = prox_generic(&np, 1e-12, &z).unwrap();
        for (a, b) in w.iter().zip(&z) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn certificates_hold() {
        let f = SetFunctionSpec::modified_range(6).unwrap();
        let z = [0.4, -1.3, 2.0, 0.0, 0.7, -0.2];
        for p in [1.5, 2.0, 3.0, f64::INFINITY] {
            let np = NormParams::new(f.clone(), p).unwrap();
            prox_generic_with_certificate(&np, 0.5, &z).unwrap();
        }
    }
}
