//! Fixtures shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use rand::Rng;
use struktnorm::{SetFunctionSpec, SubsetMask};

pub fn masks(lists: &[&[usize]]) -> Vec<SubsetMask> {
    lists.iter().map(|l| SubsetMask::from_indices(l.iter().copied())).collect()
}

/// Pairs of `{1, 2, 3}` at unit cost: `F̃(V) = 2`, `F_−(V) = 3/2`.
pub fn pair_code() -> SetFunctionSpec {
    SetFunctionSpec::block_code(3, masks(&[&[0, 1], &[1, 2], &[0, 2]]), vec![1.0; 3]).unwrap()
}

/// Named functions covering every family, `d ≤ 10`.
pub fn suite() -> Vec<(&'static str, SetFunctionSpec)> {
    vec![
        ("cardinality", SetFunctionSpec::cardinality(6).unwrap()),
        ("indicator_nonempty", SetFunctionSpec::indicator_nonempty(5).unwrap()),
        ("partition_group_count", SetFunctionSpec::partition_group_count(6, masks(&[&[0, 1, 2], &[3, 4], &[5]])).unwrap()),
        ("overlap_count", SetFunctionSpec::overlap_count(6, masks(&[&[0, 1, 2], &[2, 3, 4], &[4, 5, 0]])).unwrap()),
        ("range", SetFunctionSpec::range(5).unwrap()),
        ("modified_range", SetFunctionSpec::modified_range(6).unwrap()),
        ("projected_range_2d", SetFunctionSpec::projected_range_2d(2, 3).unwrap()),
        ("exclusive_hard", SetFunctionSpec::exclusive_hard(6, masks(&[&[0, 1, 2], &[3, 4, 5]])).unwrap()),
        ("exclusive_max_overlap", SetFunctionSpec::exclusive_max_overlap(6, masks(&[&[0, 1], &[2, 3, 4], &[5]])).unwrap()),
        ("block_code", pair_code()),
    ]
}

/// Submodular members of the suite.
pub fn submodular_suite() -> Vec<(&'static str, SetFunctionSpec)> {
    suite().into_iter().filter(|(_, f)| f.is_submodular()).collect()
}

/// Gaussian-free random vector: entries uniform in `[−2, 2]`, each zero
/// with probability `zero`.
pub fn vector(rng: &mut impl Rng, d: usize, zero: f64) -> Vec<f64> {
    (0..d).map(|_| if rng.random::<f64>() < zero { 0.0 } else { rng.random_range(-2.0..2.0) }).collect()
}

pub fn nonneg(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(0.0..1.0)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn lp(w: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        w.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        w.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}
