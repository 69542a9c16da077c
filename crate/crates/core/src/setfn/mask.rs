use std::cmp::Ordering;
use std::fmt;
use std::ops::{BitAnd, BitOr, BitXor};

use crate::error::{Error, Result};

/// Largest ground set representable by a [`SubsetMask`].
pub const MAX_D: usize = 256;
/// Largest ground set for routines that enumerate all `2^d` subsets.
pub const EXHAUSTIVE_LIMIT: usize = 20;

const WORDS: usize = MAX_D / 64;

/// The ground set `V = {0, …, d-1}` (reported 1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroundSet {
    d: usize,
}

impl GroundSet {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 || d > MAX_D {
            return Err(Error::InvalidArgument(format!(
                "ground set size must be in 1..={MAX_D}, got {d}"
            )));
        }
        Ok(Self { d })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn full(&self) -> SubsetMask {
        SubsetMask::full(self.d)
    }

    pub fn contains(&self, a: SubsetMask) -> bool {
        a.last().is_none_or(|m| m < self.d)
    }

    /// Number of subsets, for exhaustive routines only.
    pub fn subset_count(&self) -> Result<u64> {
        exhaustive_guard(self.d)?;
        Ok(1u64 << self.d)
    }
}

pub(crate) fn exhaustive_guard(d: usize) -> Result<()> {
    if d > EXHAUSTIVE_LIMIT {
        Err(Error::TooLarge { d, limit: EXHAUSTIVE_LIMIT })
    } else {
        Ok(())
    }
}

/// A subset of the ground set as a fixed-width bit mask.
///
/// Ordering compares masks as unsigned integers, so the "lexicographically
/// smallest mask" of a family is its minimum.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SubsetMask {
    w: [u64; WORDS],
}

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask { w: [0; WORDS] };

    /// Mask whose low 64 bits are `bits`.
    pub const fn from_bits(bits: u64) -> Self {
        let mut w = [0; WORDS];
        w[0] = bits;
        SubsetMask { w }
    }

    pub fn full(d: usize) -> Self {
        assert!(d <= MAX_D);
        let mut m = Self::EMPTY;
        for (k, word) in m.w.iter_mut().enumerate() {
            let lo = k * 64;
            if d >= lo + 64 {
                *word = u64::MAX;
            } else if d > lo {
                *word = (1u64 << (d - lo)) - 1;
            }
        }
        m
    }

    pub fn singleton(i: usize) -> Self {
        Self::EMPTY.with(i)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        let mut m = Self::EMPTY;
        for i in it {
            m.insert(i);
        }
        m
    }

    /// Parses sorted or unsorted 1-based indices, checking they lie in `1..=d`.
    pub fn from_one_based(idx: &[usize], d: usize) -> Result<Self> {
        let mut m = Self::EMPTY;
        for &i in idx {
            if i == 0 || i > d {
                return Err(Error::InvalidArgument(format!("index {i} outside 1..={d}")));
            }
            m.insert(i - 1);
        }
        Ok(m)
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.iter().map(|i| i + 1).collect()
    }

    pub fn to_indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Low 64 bits; only meaningful when every element is below 64.
    pub fn low_bits(&self) -> u64 {
        debug_assert!(self.w[1..].iter().all(|&x| x == 0));
        self.w[0]
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < MAX_D && (self.w[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < MAX_D, "index {i} exceeds mask width");
        self.w[i >> 6] |= 1u64 << (i & 63);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        if i < MAX_D {
            self.w[i >> 6] &= !(1u64 << (i & 63));
        }
    }

    #[inline]
    pub fn with(mut self, i: usize) -> Self {
        self.insert(i);
        self
    }

    #[inline]
    pub fn without(mut self, i: usize) -> Self {
        self.remove(i);
        self
    }

    #[inline]
    pub fn union(&self, o: &Self) -> Self {
        *self | *o
    }

    #[inline]
    pub fn intersection(&self, o: &Self) -> Self {
        *self & *o
    }

    #[inline]
    pub fn difference(&self, o: &Self) -> Self {
        let mut m = *self;
        for k in 0..WORDS {
            m.w[k] &= !o.w[k];
        }
        m
    }

    #[inline]
    pub fn is_subset(&self, o: &Self) -> bool {
        (0..WORDS).all(|k| self.w[k] & !o.w[k] == 0)
    }

    #[inline]
    pub fn intersects(&self, o: &Self) -> bool {
        (0..WORDS).any(|k| self.w[k] & o.w[k] != 0)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.w.iter().all(|&x| x == 0)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.w.iter().map(|x| x.count_ones() as usize).sum()
    }

    /// Smallest element.
    pub fn first(&self) -> Option<usize> {
        self.w
            .iter()
            .enumerate()
            .find(|(_, &x)| x != 0)
            .map(|(k, x)| k * 64 + x.trailing_zeros() as usize)
    }

    /// Largest element.
    pub fn last(&self) -> Option<usize> {
        self.w
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &x)| x != 0)
            .map(|(k, x)| k * 64 + 63 - x.leading_zeros() as usize)
    }

    /// Elements in ascending order.
    pub fn iter(&self) -> MaskIter {
        MaskIter { w: self.w, k: 0 }
    }

    /// Sum of `v[i]` over the elements.
    pub fn sum(&self, v: &[f64]) -> f64 {
        self.iter().map(|i| v[i]).sum()
    }
}

impl Ord for SubsetMask {
    fn cmp(&self, o: &Self) -> Ordering {
        for k in (0..WORDS).rev() {
            match self.w[k].cmp(&o.w[k]) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for SubsetMask {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

macro_rules! bitop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for SubsetMask {
            type Output = SubsetMask;
            #[inline]
            #[allow(clippy::assign_op_pattern)]
            fn $f(mut self, o: SubsetMask) -> SubsetMask {
                for k in 0..WORDS {
                    self.w[k] = self.w[k] $op o.w[k];
                }
                self
            }
        }
    };
}
bitop!(BitOr, bitor, |);
bitop!(BitAnd, bitand, &);
bitop!(BitXor, bitxor, ^);

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

pub struct MaskIter {
    w: [u64; WORDS],
    k: usize,
}

impl Iterator for MaskIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        while self.k < WORDS {
            let x = self.w[self.k];
            if x != 0 {
                self.w[self.k] = x & (x - 1);
                return Some(self.k * 64 + x.trailing_zeros() as usize);
            }
            self.k += 1;
        }
        None
    }
}

/// Iterates the submasks of `m` (as `u64`), including `0` and `m`.
pub(crate) fn submasks(m: u64) -> impl Iterator<Item = u64> {
    let mut s = m;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let cur = s;
        if s == 0 {
            done = true;
        } else {
            s = (s - 1) & m;
        }
        Some(cur)
    })
}
