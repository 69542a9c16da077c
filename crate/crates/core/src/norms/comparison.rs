//! Closed-form penalties used as baselines.

use super::lq::lp_norm;
use crate::error::{Error, Result};
use crate::setfn::SubsetMask;

#[derive(Clone, Debug, PartialEq)]
pub enum ComparisonNorm {
    /// `Σ_G d_G ‖w_G‖_p` over possibly overlapping groups.
    WeightedL1LpOverlap { groups: Vec<SubsetMask>, weights: Vec<f64>, p: f64 },
    /// `Σ_G ‖h_G ∘ w_G‖_2` with per-coordinate weights; `weights[g][i]` is
    /// read for `i ∈ G` only.
    HadamardWeightedOverlap { groups: Vec<SubsetMask>, weights: Vec<Vec<f64>> },
    /// `(Σ_G ‖w_G‖_1^p)^{1/p}`.
    LpL1Exclusive { groups: Vec<SubsetMask>, p: f64 },
    /// `α‖w‖_1 + (1 − α)/2 ‖w‖_2²`.
    ElasticNet { alpha: f64 },
    L1,
    /// `½‖w‖_2²`.
    Ridge,
}

fn check_groups(groups: &[SubsetMask], d: usize) -> Result<()> {
    let full = SubsetMask::full(d);
    if groups.is_empty() {
        return Err(Error::InvalidArgument("no groups given".into()));
    }
    for g in groups {
        if g.is_empty() || !g.is_subset(&full) {
            return Err(Error::InvalidArgument(format!("group {g:?} is empty or outside 1..={d}")));
        }
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("p must be at least 1, got {p}")))
    }
}

fn restrict(w: &[f64], g: SubsetMask) -> Vec<f64> {
    g.iter().map(|i| w[i]).collect()
}

impl ComparisonNorm {
    pub fn name(&self) -> &'static str {
        match self {
            ComparisonNorm::WeightedL1LpOverlap { .. } => "weighted_l1lp_overlap",
            ComparisonNorm::HadamardWeightedOverlap { .. } => "hadamard_weighted_overlap",
            ComparisonNorm::LpL1Exclusive { .. } => "lp_l1_exclusive",
            ComparisonNorm::ElasticNet { .. } => "elastic_net",
            ComparisonNorm::L1 => "l1",
            ComparisonNorm::Ridge => "ridge",
        }
    }

    /// Checks the parameters against dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            ComparisonNorm::WeightedL1LpOverlap { groups, weights, p } => {
                check_groups(groups, d)?;
                check_p(*p)?;
                if weights.len() != groups.len() || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
                    return Err(Error::InvalidArgument("need one finite nonnegative weight per group".into()));
                }
            }
            ComparisonNorm::HadamardWeightedOverlap { groups, weights } => {
                check_groups(groups, d)?;
                if weights.len() != groups.len()
                    || weights.iter().any(|h| h.len() != d || h.iter().any(|x| !(*x >= 0.0) || !x.is_finite()))
                {
                    return Err(Error::InvalidArgument("need a finite nonnegative length-d weight vector per group".into()));
                }
            }
            ComparisonNorm::LpL1Exclusive { groups, p } => {
                check_groups(groups, d)?;
                check_p(*p)?;
            }
            ComparisonNorm::ElasticNet { alpha } => {
                if !(0.0..=1.0).contains(alpha) {
                    return Err(Error::InvalidArgument(format!("α must lie in [0, 1], got {alpha}")));
                }
            }
            ComparisonNorm::L1 | ComparisonNorm::Ridge => {}
        }
        Ok(())
    }

    pub fn value(&self, w: &[f64]) -> Result<f64> {
        self.validate(w.len())?;
        Ok(match self {
            ComparisonNorm::WeightedL1LpOverlap { groups, weights, p } => {
                groups.iter().zip(weights).map(|(g, dg)| dg * lp_norm(&restrict(w, *g), *p)).sum()
            }
            ComparisonNorm::HadamardWeightedOverlap { groups, weights } => groups
                .iter()
                .zip(weights)
                .map(|(g, h)| g.iter().map(|i| (h[i] * w[i]).powi(2)).sum::<f64>().sqrt())
                .sum(),
            ComparisonNorm::LpL1Exclusive { groups, p } => {
                let l1: Vec<f64> = groups.iter().map(|g| lp_norm(&restrict(w, *g), 1.0)).collect();
                lp_norm(&l1, *p)
            }
            ComparisonNorm::ElasticNet { alpha } => {
                alpha * lp_norm(w, 1.0) + 0.5 * (1.0 - alpha) * w.iter().map(|x| x * x).sum::<f64>()
            }
            ComparisonNorm::L1 => lp_norm(w, 1.0),
            ComparisonNorm::Ridge => 0.5 * w.iter().map(|x| x * x).sum::<f64>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(idx: &[usize], d: usize) -> SubsetMask {
        SubsetMask::from_one_based(idx, d).unwrap()
    }

    #[test]
    fn exclusive_example() {
        let n = ComparisonNorm::LpL1Exclusive { groups: vec![m(&[1, 2], 4), m(&[3, 4], 4)], p: 2.0 };
        assert!((n.value(&[1.0, 1.0, 1.0, 0.0]).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(n.value(&[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn malformed_groups_are_rejected() {
        let n = ComparisonNorm::LpL1Exclusive { groups: vec![m(&[1, 2], 4), SubsetMask::singleton(7)], p: 2.0 };
        assert!(n.value(&[1.0; 4]).is_err());
        let n = ComparisonNorm::WeightedL1LpOverlap { groups: vec![m(&[1], 2)], weights: vec![], p: 2.0 };
        assert!(n.value(&[1.0; 2]).is_err());
    }
}
