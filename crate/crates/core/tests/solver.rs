mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use struktnorm::experiment::{interval_groups, run_experiment, ExperimentConfig, Geometry, PanelEntry, SupportSpec};
use struktnorm::norms::{self, ComparisonNorm, NormParams};
use struktnorm::solver::{self, LeastSquares, ProxState, Regularizer, SolverOptions, CERTIFICATE_SLACK};
use struktnorm::{Exec, SetFunctionSpec, SubsetMask};

fn problem(seed: u64, n: usize, d: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let w: Vec<f64> = (0..d).map(|i| if i < d / 2 { 1.0 } else { 0.0 }).collect();
    let y = &x * DVector::from_vec(w) + DVector::from_fn(n, |_, _| 0.5 * rng.sample::<f64, _>(StandardNormal));
    (x, y)
}

/// Cyclic coordinate descent on `(1/2n)‖y − Xw‖² + λ‖w‖₁`.
fn lasso_cd(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Vec<f64> {
    let (n, d) = (x.nrows() as f64, x.ncols());
    let mut w = DVector::<f64>::zeros(d);
    let mut r = y.clone();
    for _ in 0..20_000 {
        let mut delta = 0.0f64;
        for j in 0..d {
            let col = x.column(j);
            let a = col.dot(&col) / n;
            let rho = col.dot(&r) / n + a * w[j];
            let new = rho.signum() * (rho.abs() - lambda).max(0.0) / a;
            let step = new - w[j];
            if step != 0.0 {
                r -= col * step;
                w[j] = new;
                delta = delta.max(step.abs());
            }
        }
        if delta < 1e-13 {
            break;
        }
    }
    w.iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn l1_matches_coordinate_descent(seed in any::<u64>(), frac in 0.02f64..0.9) {
        let (x, y) = problem(seed, 40, 12);
        let ls = LeastSquares::new(&x, &y).unwrap();
        let lambda = frac * Regularizer::L1.lambda_max(ls.b.as_slice()).unwrap();
        let opts = SolverOptions { tol: 1e-12, ..SolverOptions::default() };
        let fit = solver::solve(&ls, &Regularizer::L1, lambda, None, &mut ProxState::default(), &opts).unwrap();
        let oracle = lasso_cd(&x, &y, lambda);
        prop_assert!(common::max_abs_diff(&fit.w_hat, &oracle) <= 1e-5, "{:?} vs {:?}", fit.w_hat, oracle);
    }

    #[test]
    fn structured_fits_carry_a_dual_certificate(seed in any::<u64>(), frac in 0.05f64..0.9, pi in 0usize..3) {
        let d = 8;
        let (x, y) = problem(seed, 30, d);
        let ls = LeastSquares::new(&x, &y).unwrap();
        let p = [1.5, 2.0, f64::INFINITY][pi];
        let reg = Regularizer::Structured(NormParams::new(SetFunctionSpec::modified_range(d).unwrap(), p).unwrap());
        let lambda = frac * reg.lambda_max(ls.b.as_slice()).unwrap();
        let fit = solver::solve(&ls, &reg, lambda, None, &mut ProxState::default(), &SolverOptions::default()).unwrap();
        let ratio = fit.dual_ratio.unwrap();
        prop_assert!(fit.converged && ratio <= 1.0 + CERTIFICATE_SLACK, "ratio {}", ratio);
        prop_assert!(fit.final_objective() <= fit.objective[0] + 1e-12);
    }
}

#[test]
fn overlapping_l1_linf_is_the_range_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in [3, 6, 10] {
        let groups = interval_groups(d);
        let gl = ComparisonNorm::WeightedL1LpOverlap { weights: vec![1.0; groups.len()], groups, p: f64::INFINITY };
        let p = NormParams::new(SetFunctionSpec::modified_range(d).unwrap(), f64::INFINITY).unwrap();
        for _ in 0..100 {
            let w = common::vector(&mut rng, d, 0.2);
            let (a, b) = (gl.value(&w).unwrap(), norms::norm(&p, &w).unwrap());
            assert!((a - b).abs() <= 1e-8 * a.max(1.0), "d = {d}: {a} vs {b}");
        }
    }
}

#[test]
fn interval_group_count_is_the_modified_range() {
    let d = 12;
    let groups = interval_groups(d);
    let f = SetFunctionSpec::modified_range(d).unwrap();
    for m in 1u64..1 << d {
        let a = SubsetMask::from_bits(m);
        assert_eq!(groups.iter().filter(|g| g.intersects(&a)).count() as f64, f.value(a));
    }
}

#[test]
fn experiments_are_reproducible_across_execution_modes() {
    let cfg = ExperimentConfig {
        geometry: Geometry::Chain1d { d: 16 },
        support: SupportSpec::Interval { k: 5 },
        n_grid: vec![12, 24],
        trials: 3,
        panel: vec![PanelEntry::L1, PanelEntry::Sub2, PanelEntry::GroupLasso],
        lambda_points: 10,
        timing: false,
        ..ExperimentConfig::default()
    };
    let a = run_experiment(&cfg, Exec::Parallel).unwrap();
    let b = run_experiment(&cfg, Exec::Sequential).unwrap();
    let c = run_experiment(&cfg, Exec::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}
