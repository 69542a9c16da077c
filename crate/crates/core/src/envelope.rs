//! Canonical polyhedron `P_F = {s ≥ 0 : s(A) ≤ F(A)}`, the lower and upper
//! combinatorial envelopes, core sets and set-cover values.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome};
use crate::setfn::{exhaustive_guard, submasks, Claim, ExtReal, SetFunctionSpec, SubsetMask};
use crate::submod;

/// Largest d for LP-based envelope routines.
pub const LP_LIMIT: usize = 16;
/// Largest d for core-set extraction.
pub const CORE_SET_LIMIT: usize = 14;

/// Margin above which a face is genuine.
pub const GENUINE_MARGIN: f64 = 1e-7;
/// Margin below which a face is redundant; in between it is degenerate.
pub const REDUNDANT_MARGIN: f64 = 1e-9;

fn lp_guard(d: usize, limit: usize) -> Result<()> {
    if d > limit {
        Err(Error::TooLarge { d, limit })
    } else {
        Ok(())
    }
}

/// The finite-valued constraints of `P_F`.
#[derive(Clone, Debug)]
pub struct CanonicalPolyhedron {
    d: usize,
    constraints: Vec<(SubsetMask, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Membership {
    Inside,
    /// A most-violated set and its excess `s(A) − F(A) > 0`.
    Violated { set: SubsetMask, excess: f64 },
}

impl CanonicalPolyhedron {
    /// Enumerates every finite-valued nonempty set (`d ≤ 20`).
    pub fn new(f: &SetFunctionSpec) -> Result<Self> {
        exhaustive_guard(f.d())?;
        let constraints = (1..1u64 << f.d())
            .map(SubsetMask::from_bits)
            .map(|a| (a, f.value(a)))
            .filter(|(_, v)| v.is_finite())
            .collect();
        Ok(CanonicalPolyhedron { d: f.d(), constraints })
    }

    /// Polyhedron of the given constraints only.
    pub fn from_constraints(d: usize, constraints: Vec<(SubsetMask, f64)>) -> Self {
        CanonicalPolyhedron { d, constraints }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn constraints(&self) -> &[(SubsetMask, f64)] {
        &self.constraints
    }

    pub fn member(&self, s: &[f64]) -> Result<Membership> {
        check_point(self.d, s)?;
        let mut worst: Option<(SubsetMask, f64)> = None;
        for &(a, fa) in &self.constraints {
            let ex = a.sum(s) - fa;
            if ex > 0.0 && worst.is_none_or(|(_, w)| ex > w) {
                worst = Some((a, ex));
            }
        }
        Ok(match worst {
            None => Membership::Inside,
            Some((set, excess)) => Membership::Violated { set, excess },
        })
    }

    /// `max cᵀs` over the polyhedron restricted to the coordinates in `cols`
    /// (others fixed at 0). Rows are projected onto `cols` and deduplicated.
    pub fn maximize_on(&self, cols: SubsetMask, c: &[f64]) -> Result<LpOutcome> {
        self.maximize_excluding(cols, c, None)
    }

    fn maximize_excluding(&self, cols: SubsetMask, c: &[f64], skip: Option<usize>) -> Result<LpOutcome> {
        let idx = cols.to_indices();
        let (rows, rhs) = project_rows(&self.constraints, cols, skip);
        let mut a = vec![0.0; rows.len() * idx.len()];
        for (r, m) in rows.iter().enumerate() {
            for (j, &i) in idx.iter().enumerate() {
                if m.contains(i) {
                    a[r * idx.len() + j] = 1.0;
                }
            }
        }
        let cc: Vec<f64> = idx.iter().map(|&i| c[i]).collect();
        lp::maximize(&a, &rhs, &cc)
    }
}

/// Projects constraints onto `cols`, keeping the tightest value per
/// projected set; returns masks (sorted) and right-hand sides.
fn project_rows(
    constraints: &[(SubsetMask, f64)],
    cols: SubsetMask,
    skip: Option<usize>,
) -> (Vec<SubsetMask>, Vec<f64>) {
    let mut best: HashMap<SubsetMask, f64> = HashMap::new();
    for (k, &(a, fa)) in constraints.iter().enumerate() {
        if Some(k) == skip {
            continue;
        }
        let p = a.intersection(&cols);
        if p.is_empty() {
            continue;
        }
        let e = best.entry(p).or_insert(fa);
        *e = e.min(fa);
    }
    let mut rows: Vec<(SubsetMask, f64)> = best.into_iter().collect();
    rows.sort_by_key(|x| x.0);
    rows.into_iter().unzip()
}

fn check_point(d: usize, s: &[f64]) -> Result<()> {
    crate::error::check_len(d, s.len())?;
    if s.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("polyhedron points must be finite and nonnegative".into()));
    }
    Ok(())
}

/// `s ∈ P_F`? Exhaustive for `d ≤ 20`, otherwise by minimizing `F − s`
/// when `F` is submodular.
pub fn polyhedron_member(f: &SetFunctionSpec, s: &[f64]) -> Result<Membership> {
    check_point(f.d(), s)?;
    if f.d() <= crate::setfn::EXHAUSTIVE_LIMIT {
        return CanonicalPolyhedron::new(f)?.member(s);
    }
    f.require_submodular()?;
    let r = submod::sfm(f, s)?;
    let tol = 1e-12 * f.value(f.full()).max(1.0);
    Ok(if r.value < -tol {
        Membership::Violated { set: r.minimizer, excess: -r.value }
    } else {
        Membership::Inside
    })
}

/// LP value and optimal cover weights for `max s(A)` over `P_F`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverSolution {
    /// Participating sets with their weights `δ^A`.
    pub weights: Vec<(SubsetMask, f64)>,
    pub value: ExtReal,
}

/// Lower combinatorial envelope `F_−(A) = max_{s ∈ P_F} s(A)` (`d ≤ 16`).
/// Verified-submodular functions are their own envelope.
pub fn lce(f: &SetFunctionSpec, a: SubsetMask) -> Result<ExtReal> {
    f.check_mask(a)?;
    if a.is_empty() {
        return Ok(ExtReal::ZERO);
    }
    if f.submodular() == Claim::Yes {
        return Ok(f.evaluate(a));
    }
    Ok(fractional_cover(f, a)?.value)
}

/// Fractional weighted set cover of `B`, always solved by LP. Its value is
/// `F_−(B)`; the weights are the LP multipliers.
pub fn fractional_cover(f: &SetFunctionSpec, b: SubsetMask) -> Result<CoverSolution> {
    lp_guard(f.d(), LP_LIMIT)?;
    f.check_mask(b)?;
    if b.is_empty() {
        return Ok(CoverSolution { weights: vec![], value: ExtReal::ZERO });
    }
    let poly = CanonicalPolyhedron::new(f)?;
    let (rows, _) = project_rows(poly.constraints(), b, None);
    let c = vec![1.0; f.d()];
    match poly.maximize_on(b, &c)? {
        LpOutcome::Unbounded => Ok(CoverSolution { weights: vec![], value: ExtReal::INFINITY }),
        LpOutcome::Optimal(sol) => {
            // Map projected rows back to a cheapest original set.
            let weights = rows
                .iter()
                .zip(&sol.y)
                .filter(|(_, &y)| y > lp::TOL)
                .map(|(p, &y)| (cheapest_superset_on(poly.constraints(), *p, b), y))
                .collect();
            Ok(CoverSolution { weights, value: ExtReal::new(sol.value)? })
        }
    }
}

fn cheapest_superset_on(constraints: &[(SubsetMask, f64)], p: SubsetMask, b: SubsetMask) -> SubsetMask {
    constraints
        .iter()
        .filter(|(a, _)| a.intersection(&b) == p)
        .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
        .map(|x| x.0)
        .expect("projected row comes from a constraint")
}

/// `F_−` on every subset, always by LP (`d ≤ 16`).
pub fn lce_table(f: &SetFunctionSpec) -> Result<Vec<f64>> {
    lp_guard(f.d(), LP_LIMIT)?;
    let poly = CanonicalPolyhedron::new(f)?;
    let c = vec![1.0; f.d()];
    let mut t = vec![0.0; 1 << f.d()];
    for (m, slot) in t.iter_mut().enumerate().skip(1) {
        *slot = poly.maximize_on(SubsetMask::from_bits(m as u64), &c)?.value();
    }
    Ok(t)
}

/// `F_−` as an explicit table function.
pub fn lce_function(f: &SetFunctionSpec) -> Result<SetFunctionSpec> {
    SetFunctionSpec::table(f.d(), lce_table(f)?)
}

/// Minimum-cost integer cover `F̃(B)` by finite-valued sets (`d ≤ 16`),
/// exact by dynamic programming over the subsets of `B`.
pub fn integer_cover(f: &SetFunctionSpec, b: SubsetMask) -> Result<CoverSolution> {
    lp_guard(f.d(), LP_LIMIT)?;
    f.check_mask(b)?;
    let d = f.d();
    let t = f.to_table()?;
    // g[T] = min_{A ⊇ T} F(A), with its argmin
    let n = 1usize << d;
    let mut g = t.clone();
    let mut arg: Vec<u64> = (0..n as u64).collect();
    for i in 0..d {
        for m in (0..n).rev() {
            if m >> i & 1 == 0 {
                let up = m | 1 << i;
                if g[up] < g[m] {
                    g[m] = g[up];
                    arg[m] = arg[up];
                }
            }
        }
    }
    let bm = b.low_bits();
    // cover[S] for S ⊆ B, filled in increasing order so S \ piece is ready
    let mut cover: Vec<(f64, u64)> = vec![(f64::INFINITY, 0); n];
    cover[0] = (0.0, 0);
    let mut subs: Vec<u64> = submasks(bm).collect();
    subs.reverse();
    for &s in subs.iter().skip(1) {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        let mut best = (f64::INFINITY, 0u64);
        for r in submasks(rest) {
            let piece = r | low;
            let v = g[piece as usize] + cover[(s ^ piece) as usize].0;
            if v < best.0 {
                best = (v, piece);
            }
        }
        cover[s as usize] = best;
    }
    let (value, _) = cover[bm as usize];
    if value.is_infinite() {
        return Ok(CoverSolution { weights: vec![], value: ExtReal::INFINITY });
    }
    let mut weights = vec![];
    let mut s = bm;
    while s != 0 {
        let piece = cover[s as usize].1;
        weights.push((SubsetMask::from_bits(arg[piece as usize]), 1.0));
        s ^= piece;
    }
    weights.sort_by_key(|x| x.0);
    Ok(CoverSolution { weights, value: ExtReal::new(value)? })
}

/// One face of `P_F` in the core set.
#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub set: SubsetMask,
    pub value: f64,
    /// The redundancy margin fell between the two thresholds.
    pub degenerate: bool,
    /// A point satisfying every other constraint but violating this one;
    /// `None` when the relaxed LP is unbounded.
    pub witness: Option<Vec<f64>>,
}

/// The minimal family of sets whose constraints define `P_F`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreSet {
    pub faces: Vec<Face>,
}

impl CoreSet {
    pub fn sets(&self) -> Vec<SubsetMask> {
        self.faces.iter().map(|f| f.set).collect()
    }

    pub fn contains(&self, a: SubsetMask) -> bool {
        self.faces.iter().any(|f| f.set == a)
    }

    pub fn constraints(&self) -> Vec<(SubsetMask, f64)> {
        self.faces.iter().map(|f| (f.set, f.value)).collect()
    }

    pub fn has_degenerate(&self) -> bool {
        self.faces.iter().any(|f| f.degenerate)
    }
}

/// Core set by LP redundancy tests (`d ≤ 14`).
///
/// Constraints are tested from the largest sets down; a redundant one is
/// dropped before the next test, which leaves the polyhedron unchanged, so
/// the result equals testing each set against all others.
pub fn core_set(f: &SetFunctionSpec) -> Result<CoreSet> {
    lp_guard(f.d(), CORE_SET_LIMIT)?;
    let mut poly = CanonicalPolyhedron::new(f)?;
    poly.constraints.sort_by(|x, y| y.0.len().cmp(&x.0.len()).then(x.0.cmp(&y.0)));
    let c = vec![1.0; f.d()];
    let mut faces = vec![];
    let mut k = 0;
    while k < poly.constraints.len() {
        let (a, fa) = poly.constraints[k];
        let out = poly.maximize_excluding(a, &c, Some(k))?;
        let scale = fa.max(1.0);
        let (v, witness) = match out {
            LpOutcome::Unbounded => (f64::INFINITY, None),
            LpOutcome::Optimal(sol) => {
                let mut s = vec![0.0; f.d()];
                for (j, i) in a.iter().enumerate() {
                    s[i] = sol.x[j];
                }
                (sol.value, Some(s))
            }
        };
        if v > fa + GENUINE_MARGIN * scale {
            faces.push(Face { set: a, value: fa, degenerate: false, witness });
            k += 1;
        } else if v <= fa + REDUNDANT_MARGIN * scale {
            poly.constraints.remove(k);
        } else {
            faces.push(Face { set: a, value: fa, degenerate: true, witness });
            k += 1;
        }
    }
    faces.sort_by_key(|x| x.set);
    Ok(CoreSet { faces })
}

/// Upper combinatorial envelope: `F` on the core set, `+∞` elsewhere.
pub fn uce_function(f: &SetFunctionSpec) -> Result<SetFunctionSpec> {
    let core = core_set(f)?;
    let mut t = vec![f64::INFINITY; 1 << f.d()];
    t[0] = 0.0;
    for face in &core.faces {
        t[face.set.low_bits() as usize] = face.value;
    }
    SetFunctionSpec::table(f.d(), t)
}

/// `F(A) = g(1_A)` for a norm-like `g` on nonnegative vectors.
pub fn induced_setfn(g: impl Fn(&[f64]) -> f64, d: usize) -> Result<SetFunctionSpec> {
    exhaustive_guard(d)?;
    let mut t = vec![0.0; 1 << d];
    let mut ind = vec![0.0; d];
    for (m, slot) in t.iter_mut().enumerate().skip(1) {
        for (i, x) in ind.iter_mut().enumerate() {
            *x = (m >> i & 1) as f64;
        }
        let v = g(&ind);
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("g(1_A) = {v} is not finite")));
        }
        *slot = v;
    }
    SetFunctionSpec::table(d, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(idx: &[usize], d: usize) -> SubsetMask {
        SubsetMask::from_one_based(idx, d).unwrap()
    }

    fn pair_code() -> SetFunctionSpec {
        SetFunctionSpec::block_code(3, vec![m(&[1, 2], 3), m(&[2, 3], 3), m(&[1, 3], 3)], vec![1.0; 3])
            .unwrap()
    }

    #[test]
    fn lce_examples() {
        let r = SetFunctionSpec::range(4).unwrap();
        assert_eq!(lce(&r, m(&[1, 4], 4)).unwrap().value(), 2.0);
        assert_eq!(lce(&pair_code(), m(&[1, 2, 3], 3)).unwrap().value(), 1.5);
        assert_eq!(lce(&r, SubsetMask::EMPTY).unwrap().value(), 0.0);
    }

    #[test]
    fn integer_cover_examples() {
        let f = pair_code();
        let full = integer_cover(&f, m(&[1, 2, 3], 3)).unwrap();
        assert_eq!(full.value.value(), 2.0);
        assert_eq!(full.weights.len(), 2);
        let pair = integer_cover(&f, m(&[1, 3], 3)).unwrap();
        assert_eq!(pair.value.value(), 1.0);
        assert_eq!(pair.weights, vec![(m(&[1, 3], 3), 1.0)]);
        assert_eq!(integer_cover(&f, SubsetMask::EMPTY).unwrap().value.value(), 0.0);
    }

    #[test]
    fn fractional_cover_of_pair_code_is_uniform() {
        let sol = fractional_cover(&pair_code(), m(&[1, 2, 3], 3)).unwrap();
        assert_eq!(sol.weights.len(), 3);
        assert!(sol.weights.iter().all(|(_, w)| (w - 0.5).abs() < 1e-12));
    }

    #[test]
    fn core_set_examples() {
        let singles = |d| (1..=d).map(|i| m(&[i], d)).collect::<Vec<_>>();
        assert_eq!(core_set(&SetFunctionSpec::cardinality(3).unwrap()).unwrap().sets(), singles(3));
        assert_eq!(core_set(&SetFunctionSpec::range(3).unwrap()).unwrap().sets(), singles(3));
        let mut pairs = vec![m(&[1, 2], 3), m(&[2, 3], 3), m(&[1, 3], 3)];
        pairs.sort();
        let core = core_set(&pair_code()).unwrap();
        assert_eq!(core.sets(), pairs);
        assert!(!core.has_degenerate());
        for face in &core.faces {
            let w = face.witness.as_ref().unwrap();
            assert!(face.set.sum(w) > face.value);
        }
    }

    #[test]
    fn membership_examples() {
        let c = SetFunctionSpec::cardinality(2).unwrap();
        assert_eq!(polyhedron_member(&c, &[0.5, 0.5]).unwrap(), Membership::Inside);
        let ind = SetFunctionSpec::indicator_nonempty(2).unwrap();
        match polyhedron_member(&ind, &[0.8, 0.8]).unwrap() {
            Membership::Violated { set, excess } => {
                assert_eq!(set, m(&[1, 2], 2));
                assert!((excess - 0.6).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn induced_examples() {
        let l1 = induced_setfn(|v| v.iter().sum(), 3).unwrap();
        assert_eq!(l1.to_table().unwrap(), SetFunctionSpec::cardinality(3).unwrap().to_table().unwrap());
        let linf = induced_setfn(|v| v.iter().cloned().fold(0.0, f64::max), 3).unwrap();
        assert_eq!(
            linf.to_table().unwrap(),
            SetFunctionSpec::indicator_nonempty(3).unwrap().to_table().unwrap()
        );
        let groups = vec![m(&[1, 2], 3), m(&[3], 3)];
        let g = induced_setfn(|v| f64::max(v[0] + v[1], v[2]), 3).unwrap();
        let ex = SetFunctionSpec::exclusive_max_overlap(3, groups).unwrap();
        assert_eq!(g.to_table().unwrap(), ex.to_table().unwrap());
    }
}
