use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use struktnorm::envelope::{core_set, integer_cover, lce};
use struktnorm::experiment::{plot_table, run_experiment, summarize, ExperimentConfig, Metric, TrialRecord};
use struktnorm::norms::{self, parse_exponent, NormParams};
use struktnorm::setfn::SubsetMask;
use struktnorm::solver::{self, LeastSquares, OverlapGroups, Regularizer, SolverOptions};
use struktnorm::submod::{sfm, smallest_stable_superset};
use struktnorm::{theory, Error, Exec, SetFunctionSpec};

use crate::input;
use crate::{Cli, Command, NormArgs};

/// 2 for configuration and input errors, 3 for numerical failures.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Numerical(_)) => 3,
        _ => 2,
    }
}

fn print(v: &impl Serialize) -> Result<()> {
    use std::io::{ErrorKind, Write};
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(v)?) {
        // a closed pipe (`| head`) is not an error
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn params(a: &NormArgs) -> Result<NormParams> {
    Ok(NormParams::new(input::set_function(&a.f)?, parse_exponent(&a.p)?)?)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Command::Norm { norm, w } => {
            let p = params(norm)?;
            print(&json!({ "value": norms::norm(&p, &input::vector(w)?)? }))
        }
        Command::Dualnorm { norm, s } => {
            let p = params(norm)?;
            print(&json!({ "value": norms::dual_norm(&p, &input::vector(s)?)? }))
        }
        Command::Prox { norm, lambda, z } => prox(&params(norm)?, *lambda, &input::vector(z)?),
        Command::Sfm { f, t } => {
            let r = sfm(&input::set_function(f)?, &input::vector(t)?)?;
            print(&json!({
                "minimizer": r.minimizer.to_one_based(),
                "value": r.value,
                "method": format!("{:?}", r.method),
            }))
        }
        Command::Envelope { f, subsets } => envelope(&input::set_function(f)?, subsets.as_deref()),
        Command::Certify(a) => certify(a, cli.seed.unwrap_or(0)),
        Command::Solve(a) => solve_cmd(a, solver_options(cli)?),
        Command::Path(a) => path_cmd(a, solver_options(cli)?),
        Command::Experiment(a) => experiment(a, cli),
        Command::Plotdata { input, out_dir } => plotdata(input, out_dir),
        Command::RelaxationConstant { p, mu, nu } => {
            let p = parse_exponent(p)?;
            if !(p > 1.0) || !(*mu > 0.0) || !(*nu > 0.0) {
                bail!("need p > 1 and positive μ, ν");
            }
            let scale = if p.is_infinite() { *mu } else { (p / (p - 1.0) * mu).powf(1.0 - 1.0 / p) * (p * nu).powf(1.0 / p) };
            print(&json!({ "p": p, "mu": mu, "nu": nu, "scale": scale }))
        }
    }
}

fn prox(p: &NormParams, lambda: f64, z: &[f64]) -> Result<()> {
    let (w, method) = if p.decomposable() {
        (norms::prox_decomposition(p, lambda, z)?, "decomposition")
    } else {
        (norms::prox_generic(p, lambda, z)?, "generic")
    };
    let cert = norms::fenchel_certificate(p, lambda, z, &w)?;
    let holds = cert.holds(1e-6);
    print(&json!({ "w": w, "method": method, "certificate": cert, "certified": holds }))
}

fn envelope(f: &SetFunctionSpec, subsets: Option<&str>) -> Result<()> {
    let d = f.d();
    let sets: Vec<SubsetMask> = match subsets {
        Some(s) => {
            let lists: Vec<Vec<usize>> = serde_json::from_str(s).context("--subsets expects a JSON list of index lists")?;
            lists.iter().map(|l| SubsetMask::from_one_based(l, d)).collect::<struktnorm::Result<_>>()?
        }
        None => {
            if d > 12 {
                bail!("listing every subset needs d ≤ 12 (got {d}); pass --subsets");
            }
            (0..1u64 << d).map(SubsetMask::from_bits).collect()
        }
    };
    let core = core_set(f)?;
    let ext = |v: f64| if v.is_finite() { json!(v) } else { json!("inf") };
    let rows = sets
        .iter()
        .map(|&a| -> Result<Value> {
            Ok(json!({
                "A": a.to_one_based(),
                "F": ext(f.value(a)),
                "F_minus": ext(lce(f, a)?.value()),
                "F_tilde": ext(integer_cover(f, a)?.value.value()),
                "in_core_set": core.contains(a),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    print(&rows)
}

#[derive(Args)]
pub struct CertifyArgs {
    #[arg(long)]
    f: String,
    #[arg(long, default_value = "2")]
    p: String,
    /// Target vector w*.
    #[arg(long, allow_hyphen_values = true)]
    w_star: String,
    /// Design matrix CSV; Q = XᵀX/n.
    #[arg(long, conflicts_with = "gram")]
    design: Option<String>,
    /// Gram matrix CSV.
    #[arg(long)]
    gram: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Cone samples for the restricted-eigenvalue estimate.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    /// Deviation u of the concentration threshold.
    #[arg(long)]
    u: Option<f64>,
    /// Monte-Carlo draws for the tail at u (0 skips it).
    #[arg(long, default_value_t = 0)]
    draws: usize,
}

fn certify(a: &CertifyArgs, seed: u64) -> Result<()> {
    let p = NormParams::new(input::set_function(&a.f)?, parse_exponent(&a.p)?)?;
    let q = match (&a.design, &a.gram) {
        (Some(x), None) => {
            let x = input::matrix(x)?;
            x.tr_mul(&x) / x.nrows() as f64
        }
        (None, Some(g)) => input::matrix(g)?,
        _ => bail!("give one of --design or --gram"),
    };
    let w_star = input::vector(&a.w_star)?;
    let cert = theory::irrepresentability(&p, &q, &w_star, a.lambda)?;
    let constants = theory::constants(p.f()).ok();
    let supp = SubsetMask::from_indices((0..w_star.len()).filter(|&i| w_star[i] != 0.0));
    let j = smallest_stable_superset(p.f(), supp)?;
    let re = theory::restricted_eigenvalue(&p, &q, j, a.samples, seed)?;
    let lambda = a.lambda.unwrap_or(cert.lambda_threshold);
    let bounds = constants.map(|c| {
        let (omega, pred) = theory::consistency_bounds(lambda, re.kappa_hat, c.rho);
        json!({
            "lambda": lambda,
            "omega_error": omega,
            "prediction_error": pred,
            "note": "κ̂ replaces κ; the constant 24 of the Ω-error bound is read without an exponent (the source typesetting is ambiguous)",
        })
    });
    let concentration = match a.u {
        Some(u) => {
            let threshold = theory::concentration_bound(&p, u)?;
            let mc = if a.draws > 0 {
                let unit = (0..q.nrows()).all(|i| (q[(i, i)] - 1.0).abs() <= 1e-12);
                Some(theory::monte_carlo_tail(&p, unit.then_some(&q), u, a.draws, seed, Exec::Parallel)?)
            } else {
                None
            };
            Some(json!({ "u": u, "threshold": threshold, "monte_carlo": mc }))
        }
        None => None,
    };
    print(&json!({
        "certificate": cert,
        "constants": constants,
        "restricted_eigenvalue": {
            "kappa_hat": re.kappa_hat,
            "samples": re.samples,
            "note": "sampled estimate, an upper bound on the true constant",
        },
        "bounds": bounds,
        "concentration": concentration,
    }))
}

/// Regularizer spec for `solve` and `path`.
#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum RegSpec {
    Structured { f: struktnorm::setfn::SetFunctionJson, p: Value },
    L1,
    Ridge,
    ElasticNet { alpha: f64 },
    Overlap { groups: Vec<Vec<usize>>, weights: Option<Vec<Vec<f64>>> },
}

fn regularizer(path: &str, d: usize) -> Result<Regularizer> {
    let spec: RegSpec = input::config(path)?;
    Ok(match spec {
        RegSpec::Structured { f, p } => {
            let p = match p {
                Value::Number(n) => n.as_f64().ok_or_else(|| anyhow!("bad exponent"))?,
                Value::String(s) => parse_exponent(&s)?,
                other => bail!("exponent must be a number or \"inf\", got {other}"),
            };
            let f = f.to_spec()?;
            if f.d() != d {
                bail!("set function has d = {}, design has {d} columns", f.d());
            }
            Regularizer::Structured(NormParams::new(f, p)?)
        }
        RegSpec::L1 => Regularizer::L1,
        RegSpec::Ridge => Regularizer::Ridge,
        RegSpec::ElasticNet { alpha } => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                bail!("elastic-net α must lie in (0, 1], got {alpha}");
            }
            Regularizer::ElasticNet(alpha)
        }
        RegSpec::Overlap { groups, weights } => {
            let members = groups
                .iter()
                .map(|g| {
                    if g.is_empty() || g.iter().any(|&i| i == 0 || i > d) {
                        bail!("group {g:?} is empty or out of 1..={d}");
                    }
                    Ok(g.iter().map(|i| i - 1).collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            let weights = match weights {
                Some(w) => {
                    if w.len() != members.len() || w.iter().zip(&members).any(|(a, b)| a.len() != b.len()) {
                        bail!("overlap weights must match the group shapes");
                    }
                    w
                }
                None => members.iter().map(|g| vec![1.0; g.len()]).collect(),
            };
            Regularizer::Overlap(OverlapGroups { d, members, weights })
        }
    })
}

fn solver_options(cli: &Cli) -> Result<SolverOptions> {
    match &cli.config {
        Some(path) => input::config(path),
        None => Ok(SolverOptions::default()),
    }
}

#[derive(Args)]
pub struct SolveArgs {
    /// Design matrix CSV (n × d).
    #[arg(long)]
    x: String,
    /// Response CSV (n values).
    #[arg(long)]
    y: String,
    /// Regularizer JSON or TOML.
    #[arg(long)]
    reg: String,
    #[arg(long)]
    lambda: f64,
    /// Ground truth for Hamming and ℓ2 errors.
    #[arg(long)]
    truth: Option<String>,
    /// CSV destination for the result row.
    #[arg(long)]
    out: String,
}

#[derive(Args)]
pub struct PathArgs {
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long)]
    reg: String,
    #[arg(long)]
    truth: Option<String>,
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Decades below λ_max.
    #[arg(long, default_value_t = 3.0)]
    decades: f64,
    #[arg(long)]
    out: String,
}

struct Problem {
    ls: LeastSquares,
    reg: Regularizer,
    truth: Option<Vec<f64>>,
}

fn problem(x: &str, y: &str, reg: &str, truth: Option<&str>) -> Result<Problem> {
    let x = input::matrix(x)?;
    let y = input::column(y)?;
    if x.nrows() != y.len() {
        bail!("design has {} rows, response has {}", x.nrows(), y.len());
    }
    let truth = truth.map(input::vector).transpose()?;
    if truth.as_ref().is_some_and(|t| t.len() != x.ncols()) {
        bail!("truth must have {} entries", x.ncols());
    }
    Ok(Problem { reg: regularizer(reg, x.ncols())?, ls: LeastSquares::new(&x, &y)?, truth })
}

#[derive(Serialize)]
struct PathRow {
    lambda: f64,
    objective: f64,
    nnz: usize,
    hamming: Option<usize>,
    l2_error: Option<f64>,
}

fn write_rows(path: &str, rows: &[PathRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {path}"))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn rows_of(points: &[solver::PathPoint]) -> Vec<PathRow> {
    points
        .iter()
        .map(|p| PathRow {
            lambda: p.report.lambda,
            objective: p.report.final_objective(),
            nnz: p.nnz,
            hamming: p.hamming,
            l2_error: p.l2_error,
        })
        .collect()
}

fn solve_cmd(a: &SolveArgs, opts: SolverOptions) -> Result<()> {
    let pr = problem(&a.x, &a.y, &a.reg, a.truth.as_deref())?;
    let pts = solver::path(&pr.ls, &pr.reg, &[a.lambda], pr.truth.as_deref(), &opts)?;
    write_rows(&a.out, &rows_of(&pts))?;
    let r = &pts[0].report;
    print(&json!({
        "regularizer": pr.reg.name(),
        "lambda": a.lambda,
        "objective": r.final_objective(),
        "iterations": r.iterations,
        "restarts": r.restarts,
        "converged": r.converged,
        "dual_ratio": r.dual_ratio,
        "w_hat": r.w_hat,
    }))
}

fn path_cmd(a: &PathArgs, opts: SolverOptions) -> Result<()> {
    if a.points == 0 || !(a.decades > 0.0) {
        bail!("the grid needs at least one point and a positive span");
    }
    let pr = problem(&a.x, &a.y, &a.reg, a.truth.as_deref())?;
    let lmax = pr.reg.lambda_max(pr.ls.b.as_slice())?;
    let grid = solver::geometric_grid(lmax, a.decades, a.points);
    let pts = solver::path(&pr.ls, &pr.reg, &grid, pr.truth.as_deref(), &opts)?;
    let rows = rows_of(&pts);
    write_rows(&a.out, &rows)?;
    let best_h = rows.iter().filter(|r| r.hamming.is_some()).min_by_key(|r| r.hamming);
    let best_l2 = rows.iter().filter(|r| r.l2_error.is_some()).min_by(|a, b| a.l2_error.partial_cmp(&b.l2_error).unwrap());
    print(&json!({
        "regularizer": pr.reg.name(),
        "lambda_max": lmax,
        "points": rows.len(),
        "all_converged": pts.iter().all(|p| p.report.converged),
        "best_hamming": best_h.map(|r| json!({ "lambda": r.lambda, "value": r.hamming })),
        "best_l2": best_l2.map(|r| json!({ "lambda": r.lambda, "value": r.l2_error })),
    }))
}

#[derive(Args)]
pub struct ExperimentArgs {
    /// CSV of per-trial records.
    #[arg(long)]
    out: String,
    /// JSON summary destination; printed when omitted.
    #[arg(long)]
    summary: Option<String>,
    /// Run cells one at a time.
    #[arg(long)]
    sequential: bool,
}

const RECORD_HEADER: [&str; 8] = ["regularizer", "n", "trial", "best_hamming", "best_l2", "lambda_h", "lambda_l2", "seconds"];

fn experiment(a: &ExperimentArgs, cli: &Cli) -> Result<()> {
    let mut cfg: ExperimentConfig = match &cli.config {
        Some(p) => input::config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let exec = if a.sequential { Exec::Sequential } else { Exec::Parallel };
    let records = run_experiment(&cfg, exec)?;
    let mut w = csv::Writer::from_path(&a.out).with_context(|| format!("writing {}", a.out))?;
    for r in &records {
        w.serialize(r)?;
    }
    w.flush()?;
    let summary = json!({ "config": cfg, "cells": summarize(&records) });
    match &a.summary {
        Some(p) => fs::write(p, serde_json::to_string_pretty(&summary)? + "\n").with_context(|| format!("writing {p}")),
        None => print(&summary),
    }
}

fn read_records(path: &str) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {path}"))?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != RECORD_HEADER {
        bail!("{path}: expected columns {}", RECORD_HEADER.join(","));
    }
    let records = rdr.deserialize().collect::<std::result::Result<Vec<TrialRecord>, _>>().with_context(|| format!("parsing {path}"))?;
    if records.is_empty() {
        bail!("{path}: no records");
    }
    Ok(records)
}

fn plotdata(input: &str, out_dir: &str) -> Result<()> {
    let records = read_records(input)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {out_dir}"))?;
    let mut written = vec![];
    for (metric, name) in [(Metric::Hamming, "hamming.dat"), (Metric::L2, "l2.dat")] {
        let (header, rows) = plot_table(&records, metric)?;
        let mut text = format!("# {}\n", header.join(" "));
        for r in rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            text += &cells.join(" ");
            text.push('\n');
        }
        let path = Path::new(out_dir).join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path.display().to_string());
    }
    print(&json!({ "files": written }))
}
