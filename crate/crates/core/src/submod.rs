//! Lovász extension, greedy algorithm, submodular minimization of `F − t`
//! and stable/inseparable sets.

use nalgebra::{DMatrix, DVector};

use crate::envelope::{CoreSet, Face, CORE_SET_LIMIT};
use crate::error::{check_len, Error, Result};
use crate::setfn::{exhaustive_guard, submasks, Claim, Family, SetFunctionSpec, SubsetMask, EXHAUSTIVE_LIMIT};

/// Indices sorted by decreasing value, ties by ascending index.
pub fn decreasing_order(w: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    idx
}

fn check_nonneg(f: &SetFunctionSpec, w: &[f64], what: &str) -> Result<()> {
    check_len(f.d(), w.len())?;
    if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what} must be finite and nonnegative")));
    }
    Ok(())
}

/// Lovász extension `f(w) = Σ_k w_{j_k} [F({j_1..j_k}) − F({j_1..j_{k−1}})]`
/// for `w ≥ 0`; `+∞` if `F` is infinite on the chain.
pub fn lovasz(f: &SetFunctionSpec, w: &[f64]) -> Result<f64> {
    check_nonneg(f, w, "Lovász extension argument")?;
    let mut chain = SubsetMask::EMPTY;
    let mut prev = 0.0;
    let mut total = 0.0;
    for j in decreasing_order(w) {
        if w[j] == 0.0 {
            break;
        }
        chain.insert(j);
        let cur = f.value(chain);
        if cur.is_infinite() {
            return Ok(f64::INFINITY);
        }
        total += w[j] * (cur - prev);
        prev = cur;
    }
    Ok(total)
}

/// Greedy vertex of `P_F` for the ordering of `w`: marginal gains on the
/// positive entries, zero elsewhere.
pub fn greedy(f: &SetFunctionSpec, w: &[f64]) -> Result<Vec<f64>> {
    check_len(f.d(), w.len())?;
    f.require_submodular()?;
    if f.monotone() == Claim::No {
        return Err(Error::InvalidArgument("greedy requires a nondecreasing function".into()));
    }
    let mut s = vec![0.0; f.d()];
    let mut chain = SubsetMask::EMPTY;
    let mut prev = 0.0;
    for j in decreasing_order(w) {
        if !(w[j] > 0.0) {
            break;
        }
        chain.insert(j);
        let cur = f.value(chain);
        if cur.is_infinite() {
            return Err(Error::Numerical(format!("F is infinite on {chain:?}")));
        }
        s[j] = cur - prev;
        prev = cur;
    }
    Ok(s)
}

/// Which minimization routine produced an [`SfmResult`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SfmMethod {
    /// Enumeration of all subsets; smallest minimizing mask.
    Brute,
    /// Interval scan for modified-range minors.
    Range1d,
    /// Rectangle scan for projected 2D range minors.
    Range2d,
    /// Group-by-group scan for separable families.
    Separable,
    /// Fujishige–Wolfe minimum-norm point, certified by its duality gap.
    MinNorm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SfmResult {
    pub minimizer: SubsetMask,
    /// `F(A) − t(A)` at the minimizer.
    pub value: f64,
    pub method: SfmMethod,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SfmOptions {
    /// Force a method; `None` picks the structured oracle, then brute force.
    pub method: Option<SfmMethod>,
    /// Fall back to the minimum-norm point when nothing else applies.
    pub allow_minnorm: bool,
}

/// Duality-gap tolerance of the minimum-norm-point method.
pub const MINNORM_GAP: f64 = 1e-8;

/// The structured oracle for `F`'s family, if any.
pub fn structured_method(f: &SetFunctionSpec) -> Option<SfmMethod> {
    match f.family() {
        Family::ModifiedRange => Some(SfmMethod::Range1d),
        Family::ProjectedRange2D { .. } => Some(SfmMethod::Range2d),
        Family::Cardinality | Family::IndicatorNonEmpty | Family::PartitionGroupCount { .. } => {
            Some(SfmMethod::Separable)
        }
        _ => None,
    }
}

/// Minimizes `A ↦ F(A) − t(A)` with the default method choice.
pub fn sfm(f: &SetFunctionSpec, t: &[f64]) -> Result<SfmResult> {
    sfm_with(f, t, &SfmOptions::default())
}

pub fn sfm_with(f: &SetFunctionSpec, t: &[f64], opts: &SfmOptions) -> Result<SfmResult> {
    check_nonneg(f, t, "modular term")?;
    let method = match opts.method {
        Some(m) => m,
        None => structured_method(f)
            .or((f.d() <= EXHAUSTIVE_LIMIT).then_some(SfmMethod::Brute))
            .or(opts.allow_minnorm.then_some(SfmMethod::MinNorm))
            .ok_or_else(|| {
                Error::Unsupported(format!(
                    "no minimization method for {} with d = {}",
                    f.family().name(),
                    f.d()
                ))
            })?,
    };
    let a = match method {
        SfmMethod::Brute => brute(f, t)?,
        SfmMethod::Range1d => range1d(f, t)?,
        SfmMethod::Range2d => range2d(f, t)?,
        SfmMethod::Separable => separable(f, t)?,
        SfmMethod::MinNorm => minnorm(f, t)?,
    };
    Ok(SfmResult { minimizer: a, value: f.value(a) - a.sum(t), method })
}

fn value_tol(f: &SetFunctionSpec, t: &[f64]) -> f64 {
    let fv = f.value(f.full());
    let scale = if fv.is_finite() { fv.abs() } else { 0.0 };
    1e-12 * (1.0 + scale + t.iter().sum::<f64>())
}

fn brute(f: &SetFunctionSpec, t: &[f64]) -> Result<SubsetMask> {
    exhaustive_guard(f.d())?;
    let n = 1usize << f.d();
    let mut tsum = vec![0.0; n];
    let mut vals = vec![0.0; n];
    let mut best = 0.0f64;
    for m in 1..n {
        let low = m.trailing_zeros() as usize;
        tsum[m] = tsum[m & (m - 1)] + t[low];
        vals[m] = f.value(SubsetMask::from_bits(m as u64)) - tsum[m];
        best = best.min(vals[m]);
    }
    let tol = value_tol(f, t);
    let m = vals.iter().position(|&v| v <= best + tol).unwrap_or(0);
    Ok(SubsetMask::from_bits(m as u64))
}

/// Best `(lo, hi)` minimizing `(pos[hi] − T[hi+1]) − (pos[lo] − T[lo])`
/// with `pos[lo] ≤ lo_max` and `pos[hi] ≥ hi_min`; scan is by `hi` then
/// `lo` ascending, first strict optimum kept.
fn best_interval(pos: &[usize], w: &[f64], lo_max: usize, hi_min: usize) -> Option<(f64, usize, usize)> {
    let mut prefix = 0.0;
    let mut best_lo: Option<(f64, usize)> = None;
    let mut best: Option<(f64, usize, usize)> = None;
    for k in 0..pos.len() {
        // lo = k uses the prefix before k
        if pos[k] <= lo_max {
            let key = pos[k] as f64 - prefix;
            if best_lo.is_none_or(|(b, _)| key > b) {
                best_lo = Some((key, k));
            }
        }
        prefix += w[k];
        if pos[k] >= hi_min {
            if let Some((key, lo)) = best_lo {
                let cost = (pos[k] as f64 - prefix) - key;
                if best.is_none_or(|(b, _, _)| cost < b) {
                    best = Some((cost, lo, k));
                }
            }
        }
    }
    best
}

fn range1d(f: &SetFunctionSpec, t: &[f64]) -> Result<SubsetMask> {
    if *f.family() != Family::ModifiedRange {
        return Err(Error::Unsupported("range1d needs a modified-range function".into()));
    }
    let g = f.ground_map();
    let c = f.contracted();
    let (cmin, cmax) = (c.first(), c.last());
    let mut pts: Vec<(usize, f64, Option<usize>)> =
        g.iter().enumerate().map(|(j, &p)| (p, t[j], Some(j))).collect();
    if let (Some(a), Some(b)) = (cmin, cmax) {
        pts.push((a, 0.0, None));
        pts.push((b, 0.0, None));
        pts.sort_by_key(|p| p.0);
    }
    let pos: Vec<usize> = pts.iter().map(|p| p.0).collect();
    let w: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let found = best_interval(&pos, &w, cmin.unwrap_or(usize::MAX), cmax.unwrap_or(0));
    // F(hull) − F(C) = d − 1 + span − F(C); the constant only matters against ∅
    let root_d = f.root_d() as f64;
    let offset = if c.is_empty() { 0.0 } else { root_d - 1.0 + (cmax.unwrap() - cmin.unwrap() + 1) as f64 };
    let tol = value_tol(f, t);
    let Some((cost, lo, hi)) = found else { return Ok(SubsetMask::EMPTY) };
    let cost = cost + root_d - offset;
    if c.is_empty() && cost >= -tol {
        return Ok(SubsetMask::EMPTY);
    }
    Ok(SubsetMask::from_indices(
        pts[lo..=hi].iter().filter(|p| p.1 > 0.0).filter_map(|p| p.2),
    ))
}

fn range2d(f: &SetFunctionSpec, t: &[f64]) -> Result<SubsetMask> {
    let Family::ProjectedRange2D { d1, d2 } = *f.family() else {
        return Err(Error::Unsupported("range2d needs a projected 2D range function".into()));
    };
    let g = f.ground_map();
    let c = f.contracted();
    let mut w = vec![0.0; d1 * d2];
    let mut local = vec![usize::MAX; d1 * d2];
    for (j, &cell) in g.iter().enumerate() {
        w[cell] = t[j];
        local[cell] = j;
    }
    let (mut cr, mut cc) = ((usize::MAX, 0), (usize::MAX, 0));
    for cell in c.iter() {
        let (r, col) = (cell / d2, cell % d2);
        cr = (cr.0.min(r), cr.1.max(r));
        cc = (cc.0.min(col), cc.1.max(col));
    }
    let offset = if c.is_empty() { 0.0 } else { (d1 + d2 + (cr.1 - cr.0) + (cc.1 - cc.0)) as f64 };
    let cols: Vec<usize> = (0..d2).collect();
    let mut best: Option<(f64, usize, usize, usize, usize)> = None;
    let mut colsum = vec![0.0; d2];
    for r0 in 0..d1 {
        if !c.is_empty() && r0 > cr.0 {
            break;
        }
        colsum.iter_mut().for_each(|x| *x = 0.0);
        for r1 in r0..d1 {
            for col in 0..d2 {
                colsum[col] += w[r1 * d2 + col];
            }
            if !c.is_empty() && r1 < cr.1 {
                continue;
            }
            let (lo_max, hi_min) = if c.is_empty() { (usize::MAX, 0) } else { (cc.0, cc.1) };
            if let Some((cost, c0, c1)) = best_interval(&cols, &colsum, lo_max, hi_min) {
                let cost = cost + (d1 + d2 + r1 - r0) as f64 - offset;
                if best.is_none_or(|b| cost < b.0) {
                    best = Some((cost, r0, r1, c0, c1));
                }
            }
        }
    }
    let tol = value_tol(f, t);
    let Some((cost, r0, r1, c0, c1)) = best else { return Ok(SubsetMask::EMPTY) };
    if c.is_empty() && cost >= -tol {
        return Ok(SubsetMask::EMPTY);
    }
    let mut a = SubsetMask::EMPTY;
    for r in r0..=r1 {
        for col in c0..=c1 {
            let cell = r * d2 + col;
            if local[cell] != usize::MAX && w[cell] > 0.0 {
                a.insert(local[cell]);
            }
        }
    }
    Ok(a)
}

fn separable(f: &SetFunctionSpec, t: &[f64]) -> Result<SubsetMask> {
    let groups = f
        .separable_groups()
        .ok_or_else(|| Error::Unsupported("separable oracle needs a group-count family".into()))?;
    let c = f.contracted();
    let mut group_of = vec![usize::MAX; f.root_d()];
    for (k, (g, _)) in groups.iter().enumerate() {
        for i in g.iter() {
            group_of[i] = k;
        }
    }
    let mut gain = vec![0.0; groups.len()];
    for (j, &r) in f.ground_map().iter().enumerate() {
        if t[j] > 0.0 {
            gain[group_of[r]] += t[j];
        }
    }
    let take: Vec<bool> = groups
        .iter()
        .zip(&gain)
        .map(|((g, wg), &p)| if g.intersects(&c) { p > 0.0 } else { p > *wg })
        .collect();
    Ok(SubsetMask::from_indices(
        f.ground_map()
            .iter()
            .enumerate()
            .filter(|&(j, &r)| t[j] > 0.0 && take[group_of[r]])
            .map(|(j, _)| j),
    ))
}

/// Greedy vertex of the base polytope of `G = F − t` minimizing `xᵀq`.
fn base_vertex(f: &SetFunctionSpec, t: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut q = vec![0.0; x.len()];
    let mut chain = SubsetMask::EMPTY;
    let mut prev = 0.0;
    for j in order {
        chain.insert(j);
        let cur = f.value(chain);
        if cur.is_infinite() {
            return Err(Error::Unsupported("minimum-norm point needs a finite function".into()));
        }
        q[j] = cur - prev - t[j];
        prev = cur;
    }
    Ok(q)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Best level set `{i : x_i ≤ θ}` of `x` for `G = F − t`.
fn best_level_set(f: &SetFunctionSpec, t: &[f64], x: &[f64]) -> (SubsetMask, f64) {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let (mut best, mut best_v) = (SubsetMask::EMPTY, 0.0);
    let mut chain = SubsetMask::EMPTY;
    let mut tsum = 0.0;
    for (k, &j) in order.iter().enumerate() {
        chain.insert(j);
        tsum += t[j];
        if k + 1 < order.len() && x[order[k + 1]] == x[j] {
            continue;
        }
        let v = f.value(chain) - tsum;
        if v < best_v {
            best = chain;
            best_v = v;
        }
    }
    (best, best_v)
}

/// Fujishige–Wolfe: the minimum-norm base `x*` of `G = F − t` yields the
/// minimizer `{x* < 0}`; stops once `G(A) − Σ min(x_i, 0) ≤ MINNORM_GAP`.
fn minnorm(f: &SetFunctionSpec, t: &[f64]) -> Result<SubsetMask> {
    f.require_submodular()?;
    let d = f.d();
    let mut pts: Vec<Vec<f64>> = vec![base_vertex(f, t, &vec![0.0; d])?];
    let mut lam = vec![1.0];
    let mut x = pts[0].clone();
    let scale = 1.0 + t.iter().sum::<f64>() + f.value(f.full()).abs();
    let eps = 1e-14 * scale * scale;
    for _ in 0..(50 * d + 500) {
        let (a, ga) = best_level_set(f, t, &x);
        let lower: f64 = x.iter().map(|&v| v.min(0.0)).sum();
        if ga - lower <= MINNORM_GAP {
            return Ok(a);
        }
        let q = base_vertex(f, t, &x)?;
        if dot(&x, &x) <= dot(&x, &q) + eps {
            break;
        }
        pts.push(q);
        lam.push(0.0);
        loop {
            let y_alpha = affine_min(&pts)?;
            let (y, alpha) = y_alpha;
            if alpha.iter().all(|&a| a > 1e-12) {
                x = y;
                lam = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lam.iter().zip(&alpha) {
                if *a <= 1e-12 {
                    theta = theta.min(l / (l - a));
                }
            }
            for k in 0..lam.len() {
                lam[k] = theta * alpha[k] + (1.0 - theta) * lam[k];
            }
            for i in 0..d {
                x[i] = theta * y[i] + (1.0 - theta) * x[i];
            }
            let keep: Vec<bool> = lam.iter().map(|&l| l > 1e-12).collect();
            let mut k = 0;
            pts.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            lam.retain(|&l| l > 1e-12);
            let s: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= s);
            x = vec![0.0; d];
            for (p, l) in pts.iter().zip(&lam) {
                for i in 0..d {
                    x[i] += l * p[i];
                }
            }
        }
    }
    let (a, ga) = best_level_set(f, t, &x);
    let lower: f64 = x.iter().map(|&v| v.min(0.0)).sum();
    if ga - lower <= MINNORM_GAP {
        Ok(a)
    } else {
        Err(Error::Numerical(format!("minimum-norm point stalled with duality gap {:.3e}", ga - lower)))
    }
}

/// Minimum-norm point of the affine hull of `pts` and its affine weights.
fn affine_min(pts: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = pts.len();
    let mut m = DMatrix::<f64>::zeros(k + 1, k + 1);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = dot(&pts[i], &pts[j]);
        }
        m[(i, k)] = 1.0;
        m[(k, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular affine system in minimum-norm point".into()))?;
    let alpha: Vec<f64> = (0..k).map(|i| sol[i]).collect();
    let d = pts[0].len();
    let mut y = vec![0.0; d];
    for (p, a) in pts.iter().zip(&alpha) {
        for i in 0..d {
            y[i] += a * p[i];
        }
    }
    Ok((y, alpha))
}

/// Smallest stable `J ⊇ K`: repeatedly adds elements of zero marginal gain.
pub fn smallest_stable_superset(f: &SetFunctionSpec, k: SubsetMask) -> Result<SubsetMask> {
    f.check_mask(k)?;
    f.require_submodular()?;
    if f.monotone() == Claim::No {
        return Err(Error::InvalidArgument("stable closure requires a nondecreasing function".into()));
    }
    if k.is_empty() {
        return Ok(k);
    }
    let mut j = k;
    loop {
        let fj = f.value(j);
        let tol = 1e-12 * fj.abs().max(1.0);
        let zero: Vec<usize> = (0..f.d()).filter(|&i| !j.contains(i) && f.value(j.with(i)) <= fj + tol).collect();
        if zero.is_empty() {
            return Ok(j);
        }
        for i in zero {
            j.insert(i);
        }
    }
}

/// Stable sets admitting no partition on which `F` is additive (`d ≤ 14`).
pub fn stable_inseparable_sets(f: &SetFunctionSpec) -> Result<CoreSet> {
    if f.d() > CORE_SET_LIMIT {
        return Err(Error::TooLarge { d: f.d(), limit: CORE_SET_LIMIT });
    }
    f.require_submodular()?;
    let d = f.d();
    let t = f.to_table()?;
    let tol = |v: f64| 1e-12 * v.abs().max(1.0);
    let mut faces = vec![];
    for a in 1u64..1 << d {
        let fa = t[a as usize];
        if fa.is_infinite() {
            continue;
        }
        let stable = (0..d).filter(|&i| a >> i & 1 == 0).all(|i| t[(a | 1 << i) as usize] > fa + tol(fa));
        if !stable {
            continue;
        }
        let low = a & a.wrapping_neg();
        let separable = submasks(a ^ low).any(|r| {
            let b = r | low;
            b != a && (t[b as usize] + t[(a ^ b) as usize] - fa).abs() <= tol(fa)
        });
        if !separable {
            faces.push(Face { set: SubsetMask::from_bits(a), value: fa, degenerate: false, witness: None });
        }
    }
    Ok(CoreSet { faces })
}
