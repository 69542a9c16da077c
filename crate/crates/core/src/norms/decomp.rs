//! Decomposition algorithms for submodular `F`: the norm by recursive
//! splitting into a restriction and a contraction, and the proximal
//! operator by the same recursion around the single-set problem.

use super::lq::{lp_norm, prox_lp_norm};
use super::{check_vector, NormParams};
use crate::error::{Error, Result};
use crate::setfn::{SetFunctionSpec, SubsetMask};
use crate::submod;

fn require_decomposable(p: &NormParams) -> Result<()> {
    if p.decomposable() {
        Ok(())
    } else {
        Err(Error::NotSubmodular(format!(
            "decomposition needs a submodular {} with a minimization oracle",
            p.f().family().name()
        )))
    }
}

/// Splits on a minimizer of `F − t` unless it is trivial.
fn split(f: &SetFunctionSpec, t: &[f64]) -> Result<Option<SubsetMask>> {
    let fv = f.value(f.full());
    let r = submod::sfm(f, t)?;
    let trivial = r.minimizer.is_empty() || r.minimizer == f.full() || r.value >= -1e-12 * fv.abs().max(1.0);
    Ok(if trivial { None } else { Some(r.minimizer) })
}

fn parts(j: SubsetMask, d: usize) -> (Vec<usize>, Vec<usize>) {
    (0..d).partition(|&i| j.contains(i))
}

fn pick<T: Copy>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i]).collect()
}

/// Restriction to the support of `z`, if needed.
fn on_support(f: &SetFunctionSpec, z: &[f64]) -> Result<Option<(SetFunctionSpec, Vec<usize>)>> {
    let supp: Vec<usize> = (0..z.len()).filter(|&i| z[i] != 0.0).collect();
    if supp.is_empty() {
        return Ok(None);
    }
    if supp.len() == z.len() {
        return Ok(Some((f.clone(), supp)));
    }
    Ok(Some((f.restrict(SubsetMask::from_indices(supp.iter().copied()))?, supp)))
}

/// A block of the norm decomposition: original indices and marginal gain.
struct Block {
    idx: Vec<usize>,
    gain: f64,
}

fn norm_blocks(
    f: &SetFunctionSpec,
    z: &[f64],
    idx: &[usize],
    p: f64,
    depth: usize,
    cap: usize,
    out: &mut Vec<Block>,
) -> Result<()> {
    if depth > cap {
        return Err(Error::Numerical(format!("decomposition exceeded depth {cap}")));
    }
    let fv = f.value(f.full());
    let zn = lp_norm(z, p);
    let t: Vec<f64> = z.iter().map(|v| fv * (v.abs() / zn).powf(p)).collect();
    match split(f, &t)? {
        None => out.push(Block { idx: idx.to_vec(), gain: fv }),
        Some(a) => {
            let (ia, ib) = parts(a, f.d());
            norm_blocks(&f.restrict(a)?, &pick(z, &ia), &pick(idx, &ia), p, depth + 1, cap, out)?;
            norm_blocks(&f.contract(a)?, &pick(z, &ib), &pick(idx, &ib), p, depth + 1, cap, out)?;
        }
    }
    Ok(())
}

fn blocks_of(p: &NormParams, w: &[f64]) -> Result<Vec<Block>> {
    if p.is_inf() {
        return Err(Error::InvalidArgument("the splitting recursion needs a finite p".into()));
    }
    require_decomposable(p)?;
    let mut out = vec![];
    if let Some((f, supp)) = on_support(p.f(), w)? {
        norm_blocks(&f, &pick(w, &supp), &supp, p.p(), 0, p.d() + 1, &mut out)?;
    }
    Ok(out)
}

/// `Ω_p(w)` by recursive splitting with `t_i = |w_i|^p F(V)/‖w‖_p^p`
/// (finite `p`, submodular `F`).
pub fn norm_decomposition(p: &NormParams, w: &[f64]) -> Result<f64> {
    check_vector(p, w)?;
    Ok(blocks_of(p, w)?
        .iter()
        .map(|b| p.root(b.gain) * lp_norm(&pick(w, &b.idx), p.p()))
        .sum())
}

/// One level set of the optimal `η`.
#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub set: SubsetMask,
    pub eta: f64,
    /// `F(A_1 ∪ … ∪ A_j) − F(A_1 ∪ … ∪ A_{j−1})`.
    pub gain: f64,
}

/// Ordered level sets, strictly decreasing in `η`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelDecomposition {
    pub levels: Vec<Level>,
}

impl LevelDecomposition {
    /// `Σ_j g_j^{1/q} ‖w_{A_j}‖_p`.
    pub fn norm(&self, w: &[f64], p: f64) -> f64 {
        let q = super::conjugate(p);
        self.levels
            .iter()
            .map(|l| {
                let wa: Vec<f64> = l.set.iter().map(|i| w[i]).collect();
                let g = if q == 1.0 { l.gain } else { l.gain.powf(1.0 / q) };
                g * lp_norm(&wa, p)
            })
            .sum()
    }
}

/// Level sets of the optimal `η`, `η_j = ‖w_{A_j}‖_p / g_j^{1/p}`; equal
/// consecutive levels are merged.
pub fn eta_decomposition(p: &NormParams, w: &[f64]) -> Result<LevelDecomposition> {
    check_vector(p, w)?;
    if w.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidArgument("the zero vector has no level sets".into()));
    }
    require_decomposable(p)?;
    let raw: Vec<(SubsetMask, f64, f64)> = if p.is_inf() {
        // level sets of |w| with telescoping gains along the chain
        let mut vals: Vec<f64> = w.iter().map(|x| x.abs()).filter(|&x| x > 0.0).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals.dedup();
        let mut prefix = SubsetMask::EMPTY;
        let mut prev = 0.0;
        let tiny = 1e-12 * p.f().value(p.f().full()).abs().max(1.0);
        let mut out: Vec<(SubsetMask, f64, f64)> = vec![];
        for &v in &vals {
            let set = SubsetMask::from_indices((0..w.len()).filter(|&i| w[i].abs() == v));
            prefix = prefix | set;
            let cur = p.f().value(prefix);
            let gain = cur - prev;
            prev = cur;
            // a level adding nothing to F joins the level above it
            match out.last_mut() {
                Some(last) if gain <= tiny => last.0 = last.0 | set,
                _ => out.push((set, v, gain)),
            }
        }
        out
    } else {
        blocks_of(p, w)?
            .into_iter()
            .map(|b| {
                let wn = lp_norm(&pick(w, &b.idx), p.p());
                (SubsetMask::from_indices(b.idx), wn.powf(p.p()), b.gain)
            })
            .collect()
    };
    // merge equal η; for finite p, raw.1 holds ‖w_A‖_p^p so merged sums stay exact
    let eta = |mass: f64, gain: f64| if p.is_inf() { mass } else { (mass / gain).powf(1.0 / p.p()) };
    let mut levels: Vec<(SubsetMask, f64, f64)> = vec![];
    for (set, mass, gain) in raw {
        if let Some(last) = levels.last_mut() {
            let (e0, e1) = (eta(last.1, last.2), eta(mass, gain));
            if (e0 - e1).abs() <= 1e-9 * e0.max(e1) {
                last.0 = last.0 | set;
                if !p.is_inf() {
                    last.1 += mass;
                }
                last.2 += gain;
                continue;
            }
        }
        levels.push((set, mass, gain));
    }
    Ok(LevelDecomposition {
        levels: levels.into_iter().map(|(set, mass, gain)| Level { set, eta: eta(mass, gain), gain }).collect(),
    })
}

fn prox_rec(
    f: &SetFunctionSpec,
    z: &[f64],
    idx: &[usize],
    p: &NormParams,
    lambda: f64,
    depth: usize,
    out: &mut [f64],
) -> Result<()> {
    if depth > p.d() + 1 {
        return Err(Error::Numerical(format!("prox recursion exceeded depth {}", p.d() + 1)));
    }
    let fv = f.value(f.full());
    let q = p.q();
    let base = prox_lp_norm(z, p.p(), lambda * p.root(fv));
    let kappa: Vec<f64> = if p.p() == 2.0 {
        let zz: f64 = z.iter().map(|v| v * v).sum();
        z.iter().map(|v| v * v * fv / zz).collect()
    } else if base.iter().any(|&v| v != 0.0) {
        z.iter().zip(&base).map(|(zi, wi)| ((zi - wi).abs() / lambda).powf(q)).collect()
    } else {
        let zq = lp_norm(z, q);
        z.iter().map(|v| fv * (v.abs() / zq).powf(q)).collect()
    };
    match split(f, &kappa)? {
        None => {
            for (k, &i) in idx.iter().enumerate() {
                out[i] = base[k];
            }
        }
        Some(a) => {
            let (ia, ib) = parts(a, f.d());
            prox_rec(&f.restrict(a)?, &pick(z, &ia), &pick(idx, &ia), p, lambda, depth + 1, out)?;
            prox_rec(&f.contract(a)?, &pick(z, &ib), &pick(idx, &ib), p, lambda, depth + 1, out)?;
        }
    }
    Ok(())
}

fn prox_checked(p: &NormParams, lambda: f64, z: &[f64]) -> Result<Vec<f64>> {
    check_vector(p, z)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("λ must be positive and finite, got {lambda}")));
    }
    require_decomposable(p)?;
    let mut out = vec![0.0; z.len()];
    if let Some((f, supp)) = on_support(p.f(), z)? {
        prox_rec(&f, &pick(z, &supp), &supp, p, lambda, 0, &mut out)?;
    }
    Ok(out)
}

/// `Prox_{λΩ_2}(z)` for submodular `F`: zero-support restriction, then
/// recursive splitting on minimizers of `F − t` with
/// `t_i = z_i² F(V)/‖z‖²`, and group shrinkage at the leaves.
pub fn prox(p: &NormParams, lambda: f64, z: &[f64]) -> Result<Vec<f64>> {
    if p.p() != 2.0 {
        return Err(Error::InvalidArgument(format!(
            "the splitting prox is stated for p = 2 (got {}); use prox_decomposition",
            p.p()
        )));
    }
    prox_checked(p, lambda, z)
}

/// The same recursion for any `p ∈ (1, ∞]`: leaves solve the single-set
/// problem `Prox_{λF(V)^{1/q}‖·‖_p}`, and splits use
/// `κ_i = |z_i − w_i|^q / λ^q` from that leaf solution.
pub fn prox_decomposition(p: &NormParams, lambda: f64, z: &[f64]) -> Result<Vec<f64>> {
    prox_checked(p, lambda, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(f: SetFunctionSpec, p: f64) -> NormParams {
        NormParams::new(f, p).unwrap()
    }

    #[test]
    fn prox_examples() {
        let ind = params(SetFunctionSpec::indicator_nonempty(2).unwrap(), 2.0);
        let w = prox(&ind, 2.0, &[3.0, 4.0]).unwrap();
        assert!((w[0] - 1.8).abs() < 1e-14 && (w[1] - 2.4).abs() < 1e-14);
        let c = params(SetFunctionSpec::cardinality(2).unwrap(), 2.0);
        let w = prox(&c, 2.0, &[3.0, -1.0]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-14 && w[1] == 0.0);
        assert_eq!(prox(&c, 2.0, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn eta_examples() {
        let ind = params(SetFunctionSpec::indicator_nonempty(2).unwrap(), 2.0);
        let e = eta_decomposition(&ind, &[3.0, 4.0]).unwrap();
        assert_eq!(e.levels.len(), 1);
        assert!((e.levels[0].eta - 5.0).abs() < 1e-12);
        assert!((e.norm(&[3.0, 4.0], 2.0) - 5.0).abs() < 1e-12);
        let c = params(SetFunctionSpec::cardinality(2).unwrap(), 2.0);
        let e = eta_decomposition(&c, &[3.0, -1.0]).unwrap();
        let etas: Vec<f64> = e.levels.iter().map(|l| l.eta).collect();
        assert_eq!(etas.len(), 2);
        assert!((etas[0] - 3.0).abs() < 1e-12 && (etas[1] - 1.0).abs() < 1e-12);
        assert!((e.norm(&[3.0, -1.0], 2.0) - 4.0).abs() < 1e-12);
        assert!(eta_decomposition(&c, &[0.0, 0.0]).is_err());
    }
}
