//! Command-line entry points: norms, envelopes, SFM, certificates, solver
//! paths and the support-recovery experiment.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod input;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "struktnorm", version, about = "Structured sparsity norms from combinatorial penalties")]
struct Cli {
    /// Configuration file (TOML or JSON) for `experiment`, `solve` and `path`.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Seed for sampling commands; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct NormArgs {
    /// Set-function JSON file.
    #[arg(long)]
    f: String,
    /// Exponent p in [1, ∞]: a decimal or "inf".
    #[arg(long, default_value = "2")]
    p: String,
}

#[derive(Subcommand)]
enum Command {
    /// Ω_p^F(w).
    Norm {
        #[command(flatten)]
        norm: NormArgs,
        /// Vector, inline or CSV/JSON file.
        #[arg(long, allow_hyphen_values = true)]
        w: String,
    },
    /// The dual norm of s.
    Dualnorm {
        #[command(flatten)]
        norm: NormArgs,
        #[arg(long, allow_hyphen_values = true)]
        s: String,
    },
    /// Prox_{λΩ}(z) with its Fenchel certificate.
    Prox {
        #[command(flatten)]
        norm: NormArgs,
        #[arg(long)]
        lambda: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// argmin_A F(A) − t(A) for a submodular F and t ≥ 0.
    Sfm {
        #[arg(long)]
        f: String,
        #[arg(long)]
        t: String,
    },
    /// F, F_−, F̃ and core-set membership per subset.
    Envelope {
        #[arg(long)]
        f: String,
        /// JSON list of 1-based index lists; all subsets when omitted.
        #[arg(long)]
        subsets: Option<String>,
    },
    /// Irrepresentability certificate, restricted eigenvalue and bounds.
    Certify(commands::CertifyArgs),
    /// One regularized least-squares fit.
    Solve(commands::SolveArgs),
    /// A warm-started regularization path.
    Path(commands::PathArgs),
    /// The synthetic support-recovery experiment.
    Experiment(commands::ExperimentArgs),
    /// Gnuplot tables (n against mean and standard error) from experiment CSV.
    Plotdata {
        #[arg(long)]
        input: String,
        #[arg(long)]
        out_dir: String,
    },
    /// Scale (qμ)^{1/q}(pν)^{1/p} relating Ω_p to μF(Supp w) + ν‖w‖_p^p.
    RelaxationConstant {
        #[arg(long)]
        p: String,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        nu: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
