//! Synthetic support-recovery experiments on interval and rectangle
//! supports, with oracle selection along each regularization path.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::NormParams;
use crate::par::Exec;
use crate::setfn::{SetFunctionSpec, SubsetMask};
use crate::solver::{self, LeastSquares, OverlapGroups, Regularizer, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Geometry {
    Chain1d { d: usize },
    Grid2d { d1: usize, d2: usize },
}

impl Geometry {
    pub fn d(&self) -> usize {
        match *self {
            Geometry::Chain1d { d } => d,
            Geometry::Grid2d { d1, d2 } => d1 * d2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SupportSpec {
    Interval { k: usize },
    Rectangle { k1: usize, k2: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Constant,
    /// `|cos x cos 5x|` along the support, or `|sin x sin 5x|` with `sine`.
    Modulated,
    Gaussian,
}

/// Regularizers of the comparison panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PanelEntry {
    #[serde(rename = "L1")]
    L1,
    #[serde(rename = "L2")]
    Ridge,
    #[serde(rename = "EN")]
    ElasticNet,
    #[serde(rename = "GL")]
    GroupLasso,
    #[serde(rename = "GL+w")]
    WeightedGroupLasso,
    #[serde(rename = "Sub2")]
    Sub2,
    #[serde(rename = "SubInf")]
    SubInf,
}

impl PanelEntry {
    pub const ALL: [PanelEntry; 7] = [
        PanelEntry::L1,
        PanelEntry::Ridge,
        PanelEntry::ElasticNet,
        PanelEntry::GroupLasso,
        PanelEntry::WeightedGroupLasso,
        PanelEntry::Sub2,
        PanelEntry::SubInf,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            PanelEntry::L1 => "L1",
            PanelEntry::Ridge => "L2",
            PanelEntry::ElasticNet => "EN",
            PanelEntry::GroupLasso => "GL",
            PanelEntry::WeightedGroupLasso => "GL+w",
            PanelEntry::Sub2 => "Sub2",
            PanelEntry::SubInf => "SubInf",
        }
    }

    pub fn from_id(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown regularizer \"{s}\"")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: Geometry,
    pub support: SupportSpec,
    pub shape: Shape,
    /// Use `|sin x sin 5x|` for the modulated shape.
    pub sine: bool,
    pub sigma: f64,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub panel: Vec<PanelEntry>,
    pub lambda_points: usize,
    pub lambda_decades: f64,
    /// Place supports at the first valid position instead of uniformly.
    pub anchored: bool,
    /// Record wall time; off makes the CSV byte-reproducible.
    pub timing: bool,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            geometry: Geometry::Chain1d { d: 256 },
            support: SupportSpec::Interval { k: 160 },
            shape: Shape::Constant,
            sine: false,
            sigma: 0.5,
            n_grid: vec![64, 128, 192, 256, 384, 512],
            trials: 20,
            seed: 0,
            panel: PanelEntry::ALL.to_vec(),
            lambda_points: 50,
            lambda_decades: 3.0,
            anchored: false,
            timing: true,
            solver_tol: 1e-8,
            solver_max_iter: 50_000,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match (self.geometry, self.support) {
            (Geometry::Chain1d { d }, SupportSpec::Interval { k }) => {
                if k == 0 || k > d {
                    return bad(format!("interval length {k} does not fit in 1..={d}"));
                }
            }
            (Geometry::Grid2d { d1, d2 }, SupportSpec::Rectangle { k1, k2 }) => {
                if k1 == 0 || k2 == 0 || k1 > d1 || k2 > d2 {
                    return bad(format!("rectangle {k1}x{k2} does not fit the {d1}x{d2} grid"));
                }
            }
            (g, s) => return bad(format!("support {s:?} does not match geometry {g:?}")),
        }
        if self.geometry.d() == 0 {
            return bad("empty geometry".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return bad("n grid must be nonempty and positive".into());
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return bad(format!("σ must be finite and nonnegative, got {}", self.sigma));
        }
        if self.panel.is_empty() {
            return bad("empty regularizer panel".into());
        }
        if self.lambda_points == 0 || !(self.lambda_decades > 0.0) {
            return bad("λ grid needs at least one point and a positive span".into());
        }
        Ok(())
    }

    /// The combinatorial function matching the geometry.
    pub fn set_function(&self) -> Result<SetFunctionSpec> {
        match self.geometry {
            Geometry::Chain1d { d } => SetFunctionSpec::modified_range(d),
            Geometry::Grid2d { d1, d2 } => SetFunctionSpec::projected_range_2d(d1, d2),
        }
    }

    pub fn groups(&self) -> Vec<SubsetMask> {
        match self.geometry {
            Geometry::Chain1d { d } => interval_groups(d),
            Geometry::Grid2d { d1, d2 } => grid_groups(d1, d2),
        }
    }

    pub fn regularizer(&self, e: PanelEntry) -> Result<Regularizer> {
        let d = self.geometry.d();
        Ok(match e {
            PanelEntry::L1 => Regularizer::L1,
            PanelEntry::Ridge => Regularizer::Ridge,
            PanelEntry::ElasticNet => Regularizer::ElasticNet(0.5),
            PanelEntry::GroupLasso => {
                let g = self.groups();
                Regularizer::Overlap(OverlapGroups {
                    d,
                    weights: g.iter().map(|m| vec![1.0; m.len()]).collect(),
                    members: g.iter().map(|m| m.to_indices()).collect(),
                })
            }
            PanelEntry::WeightedGroupLasso => Regularizer::Overlap(self.weighted_groups()),
            PanelEntry::Sub2 => Regularizer::Structured(NormParams::new(self.set_function()?, 2.0)?),
            PanelEntry::SubInf => Regularizer::Structured(NormParams::new(self.set_function()?, f64::INFINITY)?),
        })
    }

    /// Groups with weights `√(m + 1) / √|G|` for a member at distance `m`
    /// from the inner boundary of `G` (the end of a prefix, the start of a
    /// suffix).
    pub fn weighted_groups(&self) -> OverlapGroups {
        let d = self.geometry.d();
        let mut members = vec![];
        let mut weights = vec![];
        let mut push = |idx: Vec<usize>, dist: &dyn Fn(usize) -> usize| {
            let scale = (idx.len() as f64).sqrt();
            weights.push(idx.iter().map(|&i| ((dist(i) + 1) as f64).sqrt() / scale).collect());
            members.push(idx);
        };
        match self.geometry {
            Geometry::Chain1d { d } => {
                for k in 1..=d {
                    push((0..k).collect(), &|i| k - 1 - i);
                }
                for k in 1..d {
                    push((k..d).collect(), &|i| i - k);
                }
            }
            Geometry::Grid2d { d1, d2 } => {
                let cells = |pred: &dyn Fn(usize, usize) -> bool| -> Vec<usize> {
                    (0..d1 * d2).filter(|&i| pred(i / d2, i % d2)).collect()
                };
                for k in 1..=d1 {
                    push(cells(&|r, _| r < k), &|i| k - 1 - i / d2);
                }
                for k in 1..d1 {
                    push(cells(&|r, _| r >= k), &|i| i / d2 - k);
                }
                for k in 1..=d2 {
                    push(cells(&|_, c| c < k), &|i| k - 1 - i % d2);
                }
                for k in 1..d2 {
                    push(cells(&|_, c| c >= k), &|i| i % d2 - k);
                }
            }
        }
        OverlapGroups { d, members, weights }
    }
}

/// `{[1, k] : 1 ≤ k ≤ d} ∪ {[k, d] : 2 ≤ k ≤ d}`, whose overlap count is
/// `d − 1 + range(A)`.
pub fn interval_groups(d: usize) -> Vec<SubsetMask> {
    let mut g: Vec<SubsetMask> = (1..=d).map(|k| SubsetMask::from_indices(0..k)).collect();
    g.extend((1..d).map(|k| SubsetMask::from_indices(k..d)));
    g
}

/// Row and column prefixes and suffixes of a `d1 × d2` grid, cell
/// `(r, c)` at index `r·d2 + c`.
pub fn grid_groups(d1: usize, d2: usize) -> Vec<SubsetMask> {
    let rows = |r0: usize, r1: usize| SubsetMask::from_indices((r0 * d2)..(r1 * d2));
    let cols = |c0: usize, c1: usize| SubsetMask::from_indices((0..d1 * d2).filter(|i| (c0..c1).contains(&(i % d2))));
    let mut g: Vec<SubsetMask> = (1..=d1).map(|k| rows(0, k)).collect();
    g.extend((1..d1).map(|k| rows(k, d1)));
    g.extend((1..=d2).map(|k| cols(0, k)));
    g.extend((1..d2).map(|k| cols(k, d2)));
    g
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one `(n, trial)` cell; every regularizer sees the same data.
pub fn cell_seed(seed: u64, n: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ n as u64) ^ trial as u64)
}

/// One synthetic instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub w_star: Vec<f64>,
}

/// Draws `(X, y, w*)` for `n` samples, deterministic in `(seed, n, trial)`.
pub fn generate(cfg: &ExperimentConfig, n: usize, trial: usize) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(cfg.seed, n, trial));
    let d = cfg.geometry.d();
    let supp: Vec<usize> = match (cfg.geometry, cfg.support) {
        (Geometry::Chain1d { d }, SupportSpec::Interval { k }) => {
            let start = if cfg.anchored { 0 } else { rng.random_range(0..=d - k) };
            (start..start + k).collect()
        }
        (Geometry::Grid2d { d1, d2 }, SupportSpec::Rectangle { k1, k2 }) => {
            let (r0, c0) = if cfg.anchored {
                (0, 0)
            } else {
                (rng.random_range(0..=d1 - k1), rng.random_range(0..=d2 - k2))
            };
            (r0..r0 + k1).flat_map(|r| (c0..c0 + k2).map(move |c| r * d2 + c)).collect()
        }
        _ => unreachable!("validated"),
    };
    let k = supp.len();
    let mut vals: Vec<f64> = match cfg.shape {
        Shape::Constant => vec![1.0; k],
        Shape::Modulated => (0..k)
            .map(|j| {
                // midpoints keep the argument inside (0, π) and off the zeros at 0
                let x = std::f64::consts::PI * (j as f64 + 0.5) / k as f64;
                if cfg.sine { (x.sin() * (5.0 * x).sin()).abs() } else { (x.cos() * (5.0 * x).cos()).abs() }
            })
            .collect(),
        Shape::Gaussian => (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
    };
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut vals {
        *v /= top;
    }
    let mut w_star = vec![0.0; d];
    for (&i, v) in supp.iter().zip(vals) {
        w_star[i] = v;
    }
    let x = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = &x * DVector::from_column_slice(&w_star) + noise * cfg.sigma;
    Ok(Instance { x, y, w_star })
}

/// Best path points of one regularizer on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub regularizer: String,
    pub n: usize,
    pub trial: usize,
    pub best_hamming: f64,
    pub best_l2: f64,
    pub lambda_h: f64,
    pub lambda_l2: f64,
    pub seconds: f64,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.best_hamming.is_nan()
    }
}

fn run_one(cfg: &ExperimentConfig, e: PanelEntry, reg: &Regularizer, ls: &LeastSquares, truth: &[f64]) -> Result<[f64; 4]> {
    let lmax = reg.lambda_max(ls.b.as_slice())?;
    if !(lmax > 0.0) {
        return Err(Error::Numerical(format!("{}: λ_max = {lmax}", e.id())));
    }
    let grid = solver::geometric_grid(lmax, cfg.lambda_decades, cfg.lambda_points);
    let opts = SolverOptions { tol: cfg.solver_tol, max_iter: cfg.solver_max_iter, ..Default::default() };
    let pts = solver::path(ls, reg, &grid, Some(truth), &opts)?;
    let mut best = [f64::INFINITY, f64::INFINITY, f64::NAN, f64::NAN];
    for p in &pts {
        let h = p.hamming.unwrap_or(usize::MAX) as f64;
        let l2 = p.l2_error.unwrap_or(f64::INFINITY);
        // ties keep the larger λ
        if h < best[0] {
            best[0] = h;
            best[2] = p.report.lambda;
        }
        if l2 < best[1] {
            best[1] = l2;
            best[3] = p.report.lambda;
        }
    }
    Ok(best)
}

/// Runs every `(regularizer, n, trial)` cell; failures become NaN rows.
/// Rows come sorted by panel order, then `n`, then trial.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Exec) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let regs: Vec<(PanelEntry, Regularizer)> =
        cfg.panel.iter().map(|&e| cfg.regularizer(e).map(|r| (e, r))).collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> =
        cfg.n_grid.iter().flat_map(|&n| (0..cfg.trials).map(move |t| (n, t))).collect();
    let per_cell = exec.map(cells, |(n, trial)| -> Result<Vec<(usize, TrialRecord)>> {
        let inst = generate(cfg, n, trial)?;
        let ls = LeastSquares::new(&inst.x, &inst.y)?;
        Ok(regs
            .iter()
            .enumerate()
            .map(|(k, (e, reg))| {
                let t0 = Instant::now();
                let r = run_one(cfg, *e, reg, &ls, &inst.w_star).unwrap_or([f64::NAN; 4]);
                let seconds = if cfg.timing { t0.elapsed().as_secs_f64() } else { 0.0 };
                let rec = TrialRecord {
                    regularizer: e.id().to_string(),
                    n,
                    trial,
                    best_hamming: r[0],
                    best_l2: r[1],
                    lambda_h: r[2],
                    lambda_l2: r[3],
                    seconds,
                };
                (k, rec)
            })
            .collect())
    });
    let mut rows = vec![];
    for c in per_cell {
        rows.extend(c?);
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.n.cmp(&b.1.n)).then(a.1.trial.cmp(&b.1.trial)));
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

/// Mean and standard error of a metric for one `(regularizer, n)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub regularizer: String,
    pub n: usize,
    pub trials: usize,
    pub failures: usize,
    pub hamming_mean: f64,
    pub hamming_se: f64,
    pub l2_mean: f64,
    pub l2_se: f64,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / m;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Groups records by regularizer (first-seen order) and `n` (ascending).
pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut regs: Vec<&str> = vec![];
    for r in records {
        if !regs.contains(&r.regularizer.as_str()) {
            regs.push(&r.regularizer);
        }
    }
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut out = vec![];
    for reg in regs {
        for &n in &ns {
            let cell: Vec<&TrialRecord> = records.iter().filter(|r| r.regularizer == reg && r.n == n).collect();
            if cell.is_empty() {
                continue;
            }
            let ok: Vec<&&TrialRecord> = cell.iter().filter(|r| !r.failed()).collect();
            let (hm, hs) = mean_se(&ok.iter().map(|r| r.best_hamming).collect::<Vec<_>>());
            let (lm, ls) = mean_se(&ok.iter().map(|r| r.best_l2).collect::<Vec<_>>());
            out.push(CellSummary {
                regularizer: reg.to_string(),
                n,
                trials: cell.len(),
                failures: cell.len() - ok.len(),
                hamming_mean: hm,
                hamming_se: hs,
                l2_mean: lm,
                l2_se: ls,
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Hamming,
    L2,
}

/// Wide table: header `n, mean…, se…` in regularizer order, one row per `n`.
pub fn plot_table(records: &[TrialRecord], metric: Metric) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to tabulate".into()));
    }
    let summary = summarize(records);
    let mut regs: Vec<String> = vec![];
    for s in &summary {
        if !regs.contains(&s.regularizer) {
            regs.push(s.regularizer.clone());
        }
    }
    let mut ns: Vec<usize> = summary.iter().map(|s| s.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut header = vec!["n".to_string()];
    header.extend(regs.iter().map(|r| format!("{r}_mean")));
    header.extend(regs.iter().map(|r| format!("{r}_se")));
    let rows = ns
        .iter()
        .map(|&n| {
            let mut row = vec![n as f64];
            let find = |r: &String| summary.iter().find(|s| &s.regularizer == r && s.n == n);
            let pick = |s: &CellSummary, se: bool| match (metric, se) {
                (Metric::Hamming, false) => s.hamming_mean,
                (Metric::Hamming, true) => s.hamming_se,
                (Metric::L2, false) => s.l2_mean,
                (Metric::L2, true) => s.l2_se,
            };
            row.extend(regs.iter().map(|r| find(r).map_or(f64::NAN, |s| pick(s, false))));
            row.extend(regs.iter().map(|r| find(r).map_or(f64::NAN, |s| pick(s, true))));
            row
        })
        .collect();
    Ok((header, rows))
}
