//! Accelerated proximal gradient for
//! `min_w (1/2n)‖y − Xw‖² + λΩ(w)` and warm-started regularization paths.

mod overlap;

pub use overlap::{OverlapGroups, OverlapState};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::norms::{self, ComparisonNorm, NormParams};

/// Sweeps per overlapping-group prox call inside the solver. The dual state
/// is warm-started, so accuracy accumulates over outer iterations.
pub const OVERLAP_SWEEPS: usize = 200;

/// Returned iterates satisfy `Ω*(b − Qŵ) ≤ λ(1 + CERTIFICATE_SLACK)` when the
/// dual norm is available.
pub const CERTIFICATE_SLACK: f64 = 1e-5;

/// A penalty with a proximal operator.
#[derive(Clone, Debug)]
pub enum Regularizer {
    /// `Ω_p^F`.
    Structured(NormParams),
    L1,
    /// `½‖w‖²`.
    Ridge,
    /// `α‖w‖_1 + (1 − α)/2 ‖w‖²`.
    ElasticNet(f64),
    /// `Σ_G ‖h_G ∘ w_G‖_2`.
    Overlap(OverlapGroups),
}

/// Mutable prox state carried across iterations and path points.
#[derive(Clone, Debug, Default)]
pub struct ProxState {
    overlap: OverlapState,
}

fn soft(z: f64, t: f64) -> f64 {
    z.signum() * (z.abs() - t).max(0.0)
}

impl Regularizer {
    /// From a closed-form penalty; only those with a prox are accepted.
    pub fn from_comparison(c: &ComparisonNorm, d: usize) -> Result<Self> {
        c.validate(d)?;
        Ok(match c {
            ComparisonNorm::L1 => Regularizer::L1,
            ComparisonNorm::Ridge => Regularizer::Ridge,
            ComparisonNorm::ElasticNet { alpha } => Regularizer::ElasticNet(*alpha),
            ComparisonNorm::WeightedL1LpOverlap { groups, weights, p } if *p == 2.0 => {
                Regularizer::Overlap(OverlapGroups {
                    d,
                    members: groups.iter().map(|g| g.to_indices()).collect(),
                    weights: groups.iter().zip(weights).map(|(g, &dg)| vec![dg; g.len()]).collect(),
                })
            }
            ComparisonNorm::HadamardWeightedOverlap { groups, weights } => Regularizer::Overlap(OverlapGroups {
                d,
                members: groups.iter().map(|g| g.to_indices()).collect(),
                weights: groups.iter().zip(weights).map(|(g, h)| g.iter().map(|i| h[i]).collect()).collect(),
            }),
            other => {
                return Err(Error::Unsupported(format!("no proximal operator for the {} penalty", other.name())))
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            Regularizer::Structured(p) => {
                let p = if p.is_inf() { "inf".to_string() } else { p.p().to_string() };
                format!("omega_p{p}")
            }
            Regularizer::L1 => "l1".into(),
            Regularizer::Ridge => "ridge".into(),
            Regularizer::ElasticNet(_) => "elastic_net".into(),
            Regularizer::Overlap(_) => "overlap_l1l2".into(),
        }
    }

    pub fn value(&self, w: &[f64]) -> Result<f64> {
        Ok(match self {
            Regularizer::Structured(p) => norms::norm(p, w)?,
            Regularizer::L1 => w.iter().map(|x| x.abs()).sum(),
            Regularizer::Ridge => 0.5 * w.iter().map(|x| x * x).sum::<f64>(),
            Regularizer::ElasticNet(a) => {
                a * w.iter().map(|x| x.abs()).sum::<f64>() + 0.5 * (1.0 - a) * w.iter().map(|x| x * x).sum::<f64>()
            }
            Regularizer::Overlap(g) => g.value(w),
        })
    }

    /// `Prox_{λ·}(z)`.
    pub fn prox(&self, z: &[f64], lambda: f64, state: &mut ProxState) -> Result<Vec<f64>> {
        Ok(match self {
            Regularizer::Structured(p) => {
                if p.decomposable() {
                    norms::prox_decomposition(p, lambda, z)?
                } else {
                    norms::prox_generic(p, lambda, z)?
                }
            }
            Regularizer::L1 => z.iter().map(|&v| soft(v, lambda)).collect(),
            Regularizer::Ridge => z.iter().map(|&v| v / (1.0 + lambda)).collect(),
            Regularizer::ElasticNet(a) => z.iter().map(|&v| soft(v, lambda * a) / (1.0 + lambda * (1.0 - a))).collect(),
            Regularizer::Overlap(g) => g.prox_budget(z, lambda, &mut state.overlap, OVERLAP_SWEEPS).0,
        })
    }

    /// Dual norm where it is available in closed form or by the norms module.
    pub fn dual_norm(&self, s: &[f64]) -> Option<f64> {
        match self {
            Regularizer::Structured(p) => norms::dual_norm(p, s).ok(),
            Regularizer::L1 => Some(s.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
            _ => None,
        }
    }

    /// Smallest `λ` with `ŵ = 0`: the dual norm of `b = Xᵀy/n`. Ridge never
    /// vanishes; it uses `‖b‖_∞` as a scale. Overlapping groups bisect on the
    /// prox.
    pub fn lambda_max(&self, b: &[f64]) -> Result<f64> {
        let inf = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(match self {
            Regularizer::Structured(p) => norms::dual_norm(p, b)?,
            Regularizer::L1 | Regularizer::Ridge => inf,
            Regularizer::ElasticNet(a) => inf / a,
            Regularizer::Overlap(g) => {
                // a nonzero w = Prox_λ(b) satisfies ⟨b, w⟩ = λΩ(w) + ‖w‖², so
                // ⟨b, w⟩ / Ω(w) > λ certifies λ < Ω*(b), even for an inexact w
                let hmin = g.weights.iter().flatten().copied().filter(|&h| h > 0.0).fold(f64::INFINITY, f64::min);
                let bn = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if bn == 0.0 {
                    return Ok(0.0);
                }
                let (mut lo, mut hi) = (0.0f64, bn / hmin);
                let mut st = OverlapState::default();
                for _ in 0..60 {
                    if hi - lo <= 1e-9 * hi {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let (w, _) = g.prox_budget(b, mid, &mut st, OVERLAP_SWEEPS);
                    let om = g.value(&w);
                    let cert = if om > 0.0 { w.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / om } else { 0.0 };
                    if cert > mid {
                        lo = lo.max(cert.min(hi));
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        })
    }
}

/// The smooth part through its sufficient statistics.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    /// `XᵀX/n`.
    pub q: DMatrix<f64>,
    /// `Xᵀy/n`.
    pub b: DVector<f64>,
    /// `yᵀy/n`.
    pub yy: f64,
    pub n: usize,
}

impl LeastSquares {
    pub fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        check_len(x.nrows(), y.len())?;
        check_finite(x.as_slice(), "design")?;
        check_finite(y.as_slice(), "response")?;
        let n = x.nrows() as f64;
        Ok(LeastSquares { q: x.tr_mul(x) / n, b: x.tr_mul(y) / n, yy: y.dot(y) / n, n: x.nrows() })
    }

    pub fn d(&self) -> usize {
        self.b.len()
    }

    /// `(1/2n)‖y − Xw‖²`.
    pub fn loss(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&(&self.q * w)) - self.b.dot(w) + 0.5 * self.yy
    }

    /// `Xᵀ(y − Xw)/n`, minus the gradient.
    pub fn residual_correlation(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.b - &self.q * w
    }

    /// Power-iteration estimate of `‖Q‖_2`.
    pub fn lipschitz_estimate(&self) -> f64 {
        let d = self.d();
        let mut v = DVector::from_element(d, 1.0 / (d as f64).sqrt());
        let mut est = 0.0;
        for _ in 0..100 {
            let u = &self.q * &v;
            let nu = u.norm();
            if nu == 0.0 {
                return 0.0;
            }
            let done = (nu - est).abs() <= 1e-6 * nu;
            est = nu;
            v = u / nu;
            if done {
                break;
            }
        }
        est
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Relative objective change at which to stop.
    pub tol: f64,
    pub max_iter: usize,
    /// Support threshold relative to `‖ŵ‖_∞`.
    pub support_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 50_000, support_threshold: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub w_hat: Vec<f64>,
    /// Objective after each accepted step.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub restarts: usize,
    pub rel_change: f64,
    pub converged: bool,
    /// `Ω*(Xᵀ(y − Xŵ)/n) / λ` when the dual norm is available.
    pub dual_ratio: Option<f64>,
    pub lambda: f64,
}

impl SolveReport {
    pub fn final_objective(&self) -> f64 {
        self.objective.last().copied().unwrap_or(f64::NAN)
    }

    /// Indices with `|ŵ_i| > threshold · ‖ŵ‖_∞`.
    pub fn support(&self, threshold: f64) -> Vec<bool> {
        support(&self.w_hat, threshold)
    }
}

pub fn support(w: &[f64], threshold: f64) -> Vec<bool> {
    let top = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    w.iter().map(|v| top > 0.0 && v.abs() > threshold * top).collect()
}

/// FISTA with backtracking and function-value restart, from `w0`.
pub fn solve(
    ls: &LeastSquares,
    reg: &Regularizer,
    lambda: f64,
    w0: Option<&[f64]>,
    state: &mut ProxState,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let d = ls.d();
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("λ must be finite and nonnegative, got {lambda}")));
    }
    let objective = |w: &DVector<f64>| -> Result<f64> {
        let pen = if lambda == 0.0 { 0.0 } else { lambda * reg.value(w.as_slice())? };
        Ok(ls.loss(w) + pen)
    };
    let report = |w: DVector<f64>, trace: Vec<f64>, it, restarts, rel, converged| {
        let dual_ratio = if lambda > 0.0 {
            reg.dual_norm(ls.residual_correlation(&w).as_slice()).map(|v| v / lambda)
        } else {
            None
        };
        SolveReport {
            w_hat: w.iter().copied().collect(),
            objective: trace,
            iterations: it,
            restarts,
            rel_change: rel,
            converged,
            dual_ratio,
            lambda,
        }
    };
    // zero is optimal once λ reaches the dual norm of b
    if lambda > 0.0 {
        if let Some(dn) = reg.dual_norm(ls.b.as_slice()) {
            if lambda >= dn * (1.0 - 1e-12) {
                let w = DVector::zeros(d);
                let f = objective(&w)?;
                return Ok(report(w, vec![f], 0, 0, 0.0, true));
            }
        }
    }
    let mut x = match w0 {
        Some(w) => {
            check_len(d, w.len())?;
            DVector::from_column_slice(w)
        }
        None => DVector::zeros(d),
    };
    let mut lip = ls.lipschitz_estimate().max(1e-12);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut f_prev = objective(&x)?;
    let mut trace = vec![f_prev];
    let mut restarts = 0;
    let mut rel = f64::INFINITY;
    let mut just_restarted = false;
    // the stopping rule tightens until the dual certificate holds
    let mut tol = opts.tol;
    let certified = |w: &DVector<f64>| -> bool {
        lambda == 0.0
            || reg
                .dual_norm(ls.residual_correlation(w).as_slice())
                .is_none_or(|v| v <= lambda * (1.0 + CERTIFICATE_SLACK))
    };
    for it in 1..=opts.max_iter {
        let grad = &ls.q * &y - &ls.b;
        let x_new = loop {
            let z = &y - &grad / lip;
            let cand = DVector::from_vec(reg.prox(z.as_slice(), lambda / lip, state)?);
            let step = &cand - &y;
            let curv = step.dot(&(&ls.q * &step));
            if curv <= lip * step.dot(&step) * (1.0 + 1e-12) {
                break cand;
            }
            lip *= 2.0;
        };
        let f_new = objective(&x_new)?;
        if f_new > f_prev {
            if just_restarted {
                // a plain proximal step failed to descend: rounding level
                let ok = certified(&x);
                return Ok(report(x, trace, it, restarts, 0.0, ok));
            }
            y = x.clone();
            t = 1.0;
            restarts += 1;
            just_restarted = true;
            continue;
        }
        just_restarted = false;
        rel = (f_prev - f_new) / f_new.abs().max(1e-300);
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &x_new + (&x_new - &x) * ((t - 1.0) / t_new);
        let moved = (&x_new - &x).norm();
        x = x_new;
        t = t_new;
        f_prev = f_new;
        trace.push(f_new);
        if rel < tol && moved <= tol.sqrt() * x.norm().max(1e-12) {
            if certified(&x) {
                return Ok(report(x, trace, it, restarts, rel, true));
            }
            tol *= 0.01;
        }
    }
    Ok(report(x, trace, opts.max_iter, restarts, rel, false))
}

/// `points` values from `lambda_max` down `decades` decades, geometric.
pub fn geometric_grid(lambda_max: f64, decades: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lambda_max];
    }
    (0..points)
        .map(|k| lambda_max * 10f64.powf(-decades * k as f64 / (points - 1) as f64))
        .collect()
}

/// One point on a path, with metrics against a reference when given.
#[derive(Clone, Debug)]
pub struct PathPoint {
    pub report: SolveReport,
    pub nnz: usize,
    pub hamming: Option<usize>,
    pub l2_error: Option<f64>,
}

/// Warm-started sweep over a strictly decreasing grid.
pub fn path(
    ls: &LeastSquares,
    reg: &Regularizer,
    grid: &[f64],
    truth: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<Vec<PathPoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty λ grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("λ grid must be strictly decreasing".into()));
    }
    if let Some(t) = truth {
        check_len(ls.d(), t.len())?;
    }
    let true_supp = truth.map(|t| t.iter().map(|&v| v != 0.0).collect::<Vec<bool>>());
    let mut state = ProxState::default();
    let mut warm: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let report = solve(ls, reg, lambda, warm.as_deref(), &mut state, opts)?;
        let supp = report.support(opts.support_threshold);
        let nnz = supp.iter().filter(|&&s| s).count();
        let hamming = true_supp.as_ref().map(|ts| ts.iter().zip(&supp).filter(|(a, b)| a != b).count());
        let l2_error = truth.map(|t| t.iter().zip(&report.w_hat).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt());
        warm = Some(report.w_hat.clone());
        out.push(PathPoint { report, nnz, hamming, l2_error });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setfn::SetFunctionSpec;

    fn identity_problem(y: &[f64]) -> LeastSquares {
        let d = y.len();
        let x = DMatrix::identity(d, d);
        LeastSquares::new(&x, &DVector::from_column_slice(y)).unwrap()
    }

    #[test]
    fn zero_lambda_gives_least_squares() {
        let x = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let w = DVector::from_column_slice(&[1.0, -2.0, 0.5]);
        let y = &x * &w;
        let ls = LeastSquares::new(&x, &y).unwrap();
        let r = solve(&ls, &Regularizer::L1, 0.0, None, &mut ProxState::default(), &SolverOptions::default()).unwrap();
        for (a, b) in r.w_hat.iter().zip(w.iter()) {
            assert!((a - b).abs() < 1e-6, "{:?}", r.w_hat);
        }
    }

    #[test]
    fn orthogonal_l1_is_soft_thresholding() {
        // X = I with n = d: ŵ = soft(y/d, λ)·d/d, since Q = I/d and b = y/d
        let y = [3.0, -1.0, 0.2, 2.0];
        let ls = identity_problem(&y);
        let lam = 0.1;
        let r = solve(&ls, &Regularizer::L1, lam, None, &mut ProxState::default(), &SolverOptions::default()).unwrap();
        for (a, yi) in r.w_hat.iter().zip(&y) {
            let expect = soft(*yi, lam * 4.0);
            assert!((a - expect).abs() < 1e-6, "{a} vs {expect}");
        }
    }

    #[test]
    fn above_lambda_max_is_exactly_zero() {
        let f = SetFunctionSpec::modified_range(4).unwrap();
        let reg = Regularizer::Structured(NormParams::new(f, 2.0).unwrap());
        let ls = identity_problem(&[1.0, -0.5, 2.0, 0.3]);
        let lmax = reg.lambda_max(ls.b.as_slice()).unwrap();
        let r = solve(&ls, &reg, lmax, None, &mut ProxState::default(), &SolverOptions::default()).unwrap();
        assert!(r.w_hat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grid_is_geometric() {
        let g = geometric_grid(1.0, 2.0, 3);
        assert!((g[1] - 0.1).abs() < 1e-15 && (g[2] - 0.01).abs() < 1e-15);
    }
}
