//! Convex ℓp relaxations of combinatorial penalties on supports.
//!
//! A set function `F` on subsets of `{1, …, d}` induces the norm `Ω_p^F`,
//! the tightest convex positively homogeneous lower bound of
//! `w ↦ F(Supp(w))^{1/q} ‖w‖_p`. This crate evaluates such norms, their
//! duals and proximal operators, analyzes the combinatorial envelopes of
//! `F`, and runs regularized least-squares experiments on support recovery.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod envelope;
pub mod error;
pub mod experiment;
pub mod lp;
pub mod norms;
pub mod par;
pub mod setfn;
pub mod solver;
pub mod submod;
pub mod theory;

pub use error::{Error, Result};
pub use par::Exec;
pub use setfn::{ExtReal, Family, GroundSet, SetFunctionSpec, SubsetMask};
