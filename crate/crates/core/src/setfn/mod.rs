//! Set functions `F: 2^V → [0, +∞]`: representations, built-in families,
//! restriction/contraction and exhaustive structural checks.

mod check;
mod extreal;
mod json;
mod mask;

use std::collections::HashMap;
use std::sync::Arc;

pub use check::{check_monotone, check_submodular, CheckOutcome, MonotoneWitness, SubmodularWitness};
pub use extreal::ExtReal;
pub use json::SetFunctionJson;
pub(crate) use mask::{exhaustive_guard, submasks};
pub use mask::{GroundSet, MaskIter, SubsetMask, EXHAUSTIVE_LIMIT, MAX_D};

use crate::error::{Error, Result};

/// Tri-state structural claim.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Claim {
    Yes,
    No,
    Unknown,
}

/// The built-in families and explicit tables. Groups and blocks are masks
/// over the family's own ground set.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Cardinality,
    IndicatorNonEmpty,
    PartitionGroupCount { groups: Vec<SubsetMask>, weights: Vec<f64> },
    OverlapCount { groups: Vec<SubsetMask>, weights: Vec<f64> },
    Range,
    ModifiedRange,
    ProjectedRange2D { d1: usize, d2: usize },
    ExclusiveHard { groups: Vec<SubsetMask> },
    ExclusiveMaxOverlap { groups: Vec<SubsetMask> },
    BlockCode { blocks: Vec<SubsetMask>, costs: Vec<f64> },
    ExplicitTable(Arc<[f64]>),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Cardinality => "cardinality",
            Family::IndicatorNonEmpty => "indicator_nonempty",
            Family::PartitionGroupCount { .. } => "partition_group_count",
            Family::OverlapCount { .. } => "overlap_count",
            Family::Range => "range",
            Family::ModifiedRange => "modified_range",
            Family::ProjectedRange2D { .. } => "projected_range_2d",
            Family::ExclusiveHard { .. } => "exclusive_hard",
            Family::ExclusiveMaxOverlap { .. } => "exclusive_max_overlap",
            Family::BlockCode { .. } => "block_code",
            Family::ExplicitTable(_) => "table",
        }
    }
}

#[derive(Debug)]
struct Root {
    d: usize,
    family: Family,
    blocks: HashMap<SubsetMask, f64>,
}

impl Root {
    fn eval(&self, a: SubsetMask) -> f64 {
        if a.is_empty() {
            return 0.0;
        }
        match &self.family {
            Family::Cardinality => a.len() as f64,
            Family::IndicatorNonEmpty => 1.0,
            Family::PartitionGroupCount { groups, weights }
            | Family::OverlapCount { groups, weights } => groups
                .iter()
                .zip(weights)
                .filter(|(g, _)| g.intersects(&a))
                .map(|(_, w)| w)
                .sum(),
            Family::Range => span(a) as f64,
            Family::ModifiedRange => (self.d - 1 + span(a)) as f64,
            Family::ProjectedRange2D { d1, d2 } => {
                let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
                for i in a.iter() {
                    let (r, c) = (i / d2, i % d2);
                    r0 = r0.min(r);
                    r1 = r1.max(r);
                    c0 = c0.min(c);
                    c1 = c1.max(c);
                }
                (d1 + d2 + (r1 - r0) + (c1 - c0)) as f64
            }
            Family::ExclusiveHard { groups } => {
                if max_overlap(groups, a) == 1 {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
            Family::ExclusiveMaxOverlap { groups } => max_overlap(groups, a) as f64,
            Family::BlockCode { .. } => self.blocks.get(&a).copied().unwrap_or(f64::INFINITY),
            Family::ExplicitTable(t) => t[a.low_bits() as usize],
        }
    }
}

fn span(a: SubsetMask) -> usize {
    a.last().unwrap() - a.first().unwrap() + 1
}

fn max_overlap(groups: &[SubsetMask], a: SubsetMask) -> usize {
    groups.iter().map(|g| g.intersection(&a).len()).max().unwrap_or(0)
}

/// A set function over a (possibly re-indexed) ground set.
///
/// Every function is a minor `A ↦ R(map(A) ∪ C) − R(C)` of a root family
/// `R`, where `map` sends the local ground set into `R`'s and `C` is the
/// contracted set; plain functions use the identity map and `C = ∅`.
#[derive(Clone, Debug)]
pub struct SetFunctionSpec {
    root: Arc<Root>,
    ground: Arc<[usize]>,
    identity: bool,
    contracted: SubsetMask,
    offset: f64,
    monotone: Claim,
    submodular: Claim,
}

impl SetFunctionSpec {
    /// Builds a family instance, validating its parameters.
    pub fn new(d: usize, family: Family) -> Result<Self> {
        GroundSet::new(d)?;
        let full = SubsetMask::full(d);
        let bad = |msg: String| Err(Error::InvalidSetFunction(msg));
        let (monotone, submodular) = match &family {
            Family::Cardinality | Family::IndicatorNonEmpty | Family::ModifiedRange => {
                (Claim::Yes, Claim::Yes)
            }
            Family::Range => (Claim::Yes, if d <= 2 { Claim::Yes } else { Claim::No }),
            Family::PartitionGroupCount { groups, weights } => {
                check_partition(groups, full)?;
                check_weights(weights, groups.len())?;
                (Claim::Yes, Claim::Yes)
            }
            Family::OverlapCount { groups, weights } => {
                check_cover(groups, full)?;
                check_weights(weights, groups.len())?;
                (Claim::Yes, Claim::Yes)
            }
            Family::ProjectedRange2D { d1, d2 } => {
                if d1 * d2 != d || *d1 == 0 || *d2 == 0 {
                    return bad(format!("grid {d1}x{d2} does not have {d} cells"));
                }
                (Claim::Yes, Claim::Yes)
            }
            Family::ExclusiveHard { groups } | Family::ExclusiveMaxOverlap { groups } => {
                check_partition(groups, full)?;
                (Claim::Yes, Claim::Unknown)
            }
            Family::BlockCode { blocks, costs } => {
                check_cover(blocks, full)?;
                check_weights(costs, blocks.len())?;
                (Claim::Unknown, Claim::Unknown)
            }
            Family::ExplicitTable(t) => {
                check_table(d, t)?;
                (Claim::Unknown, Claim::Unknown)
            }
        };
        let mut blocks = HashMap::new();
        if let Family::BlockCode { blocks: bs, costs } = &family {
            for (b, &c) in bs.iter().zip(costs) {
                let e = blocks.entry(*b).or_insert(c);
                *e = f64::min(*e, c);
            }
        }
        Ok(SetFunctionSpec {
            root: Arc::new(Root { d, family, blocks }),
            ground: (0..d).collect::<Vec<_>>().into(),
            identity: true,
            contracted: SubsetMask::EMPTY,
            offset: 0.0,
            monotone,
            submodular,
        })
    }

    pub fn cardinality(d: usize) -> Result<Self> {
        Self::new(d, Family::Cardinality)
    }

    pub fn indicator_nonempty(d: usize) -> Result<Self> {
        Self::new(d, Family::IndicatorNonEmpty)
    }

    pub fn range(d: usize) -> Result<Self> {
        Self::new(d, Family::Range)
    }

    pub fn modified_range(d: usize) -> Result<Self> {
        Self::new(d, Family::ModifiedRange)
    }

    pub fn projected_range_2d(d1: usize, d2: usize) -> Result<Self> {
        Self::new(d1 * d2, Family::ProjectedRange2D { d1, d2 })
    }

    /// Unit-weight group count over a partition.
    pub fn partition_group_count(d: usize, groups: Vec<SubsetMask>) -> Result<Self> {
        let weights = vec![1.0; groups.len()];
        Self::new(d, Family::PartitionGroupCount { groups, weights })
    }

    /// Unit-weight overlap count.
    pub fn overlap_count(d: usize, groups: Vec<SubsetMask>) -> Result<Self> {
        let weights = vec![1.0; groups.len()];
        Self::new(d, Family::OverlapCount { groups, weights })
    }

    pub fn exclusive_hard(d: usize, groups: Vec<SubsetMask>) -> Result<Self> {
        Self::new(d, Family::ExclusiveHard { groups })
    }

    pub fn exclusive_max_overlap(d: usize, groups: Vec<SubsetMask>) -> Result<Self> {
        Self::new(d, Family::ExclusiveMaxOverlap { groups })
    }

    pub fn block_code(d: usize, blocks: Vec<SubsetMask>, costs: Vec<f64>) -> Result<Self> {
        Self::new(d, Family::BlockCode { blocks, costs })
    }

    /// Dense table indexed by mask, `+∞` allowed.
    pub fn table(d: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(d, Family::ExplicitTable(values.into()))
    }

    /// Materializes `f` on all `2^d` subsets.
    pub fn from_fn(d: usize, f: impl Fn(SubsetMask) -> f64) -> Result<Self> {
        exhaustive_guard(d)?;
        let t = (0..1u64 << d).map(|m| f(SubsetMask::from_bits(m))).collect();
        Self::table(d, t)
    }

    pub fn d(&self) -> usize {
        self.ground.len()
    }

    pub fn ground_set(&self) -> GroundSet {
        GroundSet::new(self.d()).expect("nonempty ground set")
    }

    pub fn full(&self) -> SubsetMask {
        SubsetMask::full(self.d())
    }

    /// Family of the underlying root function.
    pub fn family(&self) -> &Family {
        &self.root.family
    }

    pub fn is_minor(&self) -> bool {
        !self.identity
    }

    pub fn monotone(&self) -> Claim {
        self.monotone
    }

    pub fn submodular(&self) -> Claim {
        self.submodular
    }

    pub(crate) fn root_d(&self) -> usize {
        self.root.d
    }

    /// Root index of each local element.
    pub(crate) fn ground_map(&self) -> &[usize] {
        &self.ground
    }

    /// Contracted set, as a root mask.
    pub(crate) fn contracted(&self) -> SubsetMask {
        self.contracted
    }

    #[inline]
    fn to_root(&self, a: SubsetMask) -> SubsetMask {
        if self.identity {
            a
        } else {
            let mut m = self.contracted;
            for j in a.iter() {
                m.insert(self.ground[j]);
            }
            m
        }
    }

    /// `F(A)` as a float, `+∞` included.
    #[inline]
    pub fn value(&self, a: SubsetMask) -> f64 {
        debug_assert!(a.last().is_none_or(|m| m < self.d()));
        if a.is_empty() {
            return 0.0;
        }
        let v = self.root.eval(self.to_root(a));
        if v.is_infinite() {
            v
        } else {
            v - self.offset
        }
    }

    pub fn evaluate(&self, a: SubsetMask) -> ExtReal {
        ExtReal::raw(self.value(a))
    }

    /// `F_J: A ↦ F(A ∩ J)` on the re-indexed ground set `J`.
    pub fn restrict(&self, j: SubsetMask) -> Result<Self> {
        self.check_mask(j)?;
        if j.is_empty() {
            return Err(Error::InvalidArgument("restriction to the empty set".into()));
        }
        let ground: Vec<usize> = j.iter().map(|i| self.ground[i]).collect();
        Ok(self.minor(ground, self.contracted, self.offset))
    }

    /// `F^J: A ↦ F(A ∪ J) − F(J)` on the re-indexed ground set `V \ J`.
    pub fn contract(&self, j: SubsetMask) -> Result<Self> {
        self.check_mask(j)?;
        let fj = self.value(j);
        if fj.is_infinite() {
            return Err(Error::InvalidArgument(format!("F({j:?}) is infinite")));
        }
        if j == self.full() {
            return Err(Error::InvalidArgument("contraction on the whole ground set".into()));
        }
        let ground: Vec<usize> =
            (0..self.d()).filter(|&i| !j.contains(i)).map(|i| self.ground[i]).collect();
        let c = self.to_root(j);
        let offset = self.root.eval(c);
        Ok(self.minor(ground, c, offset))
    }

    fn minor(&self, ground: Vec<usize>, contracted: SubsetMask, offset: f64) -> Self {
        let keep = |c: Claim| if c == Claim::Yes { Claim::Yes } else { Claim::Unknown };
        let identity = contracted.is_empty()
            && ground.len() == self.root.d
            && ground.iter().enumerate().all(|(k, &g)| k == g);
        SetFunctionSpec {
            root: self.root.clone(),
            ground: ground.into(),
            identity,
            contracted,
            offset,
            monotone: keep(self.monotone),
            submodular: keep(self.submodular),
        }
    }

    pub(crate) fn check_mask(&self, a: SubsetMask) -> Result<()> {
        if self.ground_set().contains(a) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{a:?} is not a subset of a ground set of size {}", self.d())))
        }
    }

    /// All `2^d` values, indexed by mask.
    pub fn to_table(&self) -> Result<Vec<f64>> {
        exhaustive_guard(self.d())?;
        Ok((0..1u64 << self.d()).map(|m| self.value(SubsetMask::from_bits(m))).collect())
    }

    /// Explicit-table copy carrying over the claims.
    pub fn materialize(&self) -> Result<Self> {
        let mut t = Self::table(self.d(), self.to_table()?)?;
        t.monotone = self.monotone;
        t.submodular = self.submodular;
        Ok(t)
    }

    /// Copy whose claims are settled by exhaustive checks (`d ≤ 20`).
    pub fn with_verified_claims(&self) -> Result<Self> {
        let mut f = self.clone();
        f.monotone = if check_monotone(self)?.holds() { Claim::Yes } else { Claim::No };
        f.submodular = if check_submodular(self)?.holds() { Claim::Yes } else { Claim::No };
        Ok(f)
    }

    /// Succeeds iff `F` is submodular by claim or by an exhaustive check.
    pub fn require_submodular(&self) -> Result<()> {
        match self.submodular {
            Claim::Yes => Ok(()),
            Claim::No => Err(Error::NotSubmodular(format!("{} is not submodular", self.family().name()))),
            Claim::Unknown => {
                if check_submodular(self)?.holds() {
                    Ok(())
                } else {
                    Err(Error::NotSubmodular(format!(
                        "{} failed the exhaustive submodularity check",
                        self.family().name()
                    )))
                }
            }
        }
    }

    /// Whether `F` is known or checkably submodular; never errors.
    pub fn is_submodular(&self) -> bool {
        self.require_submodular().is_ok()
    }

    /// Union of the finite-valued sets, for `d ≤ 20`.
    pub fn domain_union(&self) -> Result<SubsetMask> {
        exhaustive_guard(self.d())?;
        let mut u = SubsetMask::EMPTY;
        for m in 1..1u64 << self.d() {
            let a = SubsetMask::from_bits(m);
            if self.value(a).is_finite() {
                u = u | a;
            }
        }
        Ok(u)
    }

    /// Groups of a separable root family, as root masks with weights.
    pub(crate) fn separable_groups(&self) -> Option<Vec<(SubsetMask, f64)>> {
        let d = self.root.d;
        match &self.root.family {
            Family::Cardinality => Some((0..d).map(|i| (SubsetMask::singleton(i), 1.0)).collect()),
            Family::IndicatorNonEmpty => Some(vec![(SubsetMask::full(d), 1.0)]),
            Family::PartitionGroupCount { groups, weights } => {
                Some(groups.iter().copied().zip(weights.iter().copied()).collect())
            }
            _ => None,
        }
    }
}

fn check_weights(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::InvalidSetFunction(format!("{} weights for {n} groups", w.len())));
    }
    if w.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::InvalidSetFunction("weights must be positive and finite".into()));
    }
    Ok(())
}

fn check_cover(groups: &[SubsetMask], full: SubsetMask) -> Result<()> {
    let mut u = SubsetMask::EMPTY;
    for g in groups {
        if g.is_empty() || !g.is_subset(&full) {
            return Err(Error::InvalidSetFunction(format!("group {g:?} is empty or out of range")));
        }
        u = u | *g;
    }
    if u != full {
        return Err(Error::InvalidSetFunction("groups do not cover the ground set".into()));
    }
    Ok(())
}

fn check_partition(groups: &[SubsetMask], full: SubsetMask) -> Result<()> {
    check_cover(groups, full)?;
    if groups.iter().map(|g| g.len()).sum::<usize>() != full.len() {
        return Err(Error::InvalidSetFunction("groups overlap; a partition is required".into()));
    }
    Ok(())
}

fn check_table(d: usize, t: &[f64]) -> Result<()> {
    exhaustive_guard(d)?;
    if t.len() != 1 << d {
        return Err(Error::InvalidSetFunction(format!("table of length {} for d = {d}", t.len())));
    }
    if t[0] != 0.0 {
        return Err(Error::InvalidSetFunction("F(∅) must be 0".into()));
    }
    let mut u = 0u64;
    for (m, &v) in t.iter().enumerate().skip(1) {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::InvalidSetFunction(format!(
                "F({:?}) = {v}; values on nonempty sets must be positive",
                SubsetMask::from_bits(m as u64)
            )));
        }
        if v.is_finite() {
            u |= m as u64;
        }
    }
    if u != (1u64 << d) - 1 {
        return Err(Error::InvalidSetFunction("finite-valued sets do not cover the ground set".into()));
    }
    Ok(())
}
