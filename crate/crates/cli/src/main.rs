//! `invkit`: certify control invariance, query certified sets, and run the
//! benchmark sweeps.

mod bench;
mod output;
mod single;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit code for a negative answer: no certificate, or a point outside the set.
pub const EXIT_NEGATIVE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "invkit", version, about = "LP certificates of control invariance for linear systems")]
struct Cli {
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Primal feasibility tolerance of the LP solver.
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol: f64,

    /// Write the LP of a single query in text form before solving it.
    #[arg(long, global = true, value_name = "PATH")]
    dump_lp: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that `Ω` itself is certified invariant and print the certificate.
    Certify(ProblemArgs),
    /// Largest certified scaling `α` of `Ω`.
    Alpha(ProblemArgs),
    /// Exact vertex-based `α*` (sufficient and necessary for `αΩ`).
    OracleAlpha(ProblemArgs),
    /// Membership of a point in the certified invariant set.
    Member {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        point: Vec<f64>,
    },
    /// Largest `r` with `r·v` in the certified invariant set.
    Ray {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        /// Comma-separated direction.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        direction: Vec<f64>,
    },
    /// Random sweep comparing the scaling LP with the vertex oracle.
    BenchEx1(bench::Ex1Args),
    /// Block-diagonal bench: certified sets against the exact maximal set along rays.
    BenchEx2(bench::Ex2Args),
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Problem JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Override the horizon stored in the file.
    #[arg(long = "N", value_name = "N")]
    horizon: Option<usize>,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    /// Use this scaling instead of computing the largest certified one.
    #[arg(long)]
    alpha: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("INVKIT_LOG"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let out = output::Sink::new(cli.output.clone());
    let solver = invkit::invariance::solver_with_tol(cli.tol);
    let result = match &cli.command {
        Command::Certify(p) => single::certify(p, &solver, cli.dump_lp.as_deref(), &out),
        Command::Alpha(p) => single::alpha(p, &solver, cli.dump_lp.as_deref(), &out),
        Command::OracleAlpha(p) => single::oracle_alpha(p, &out),
        Command::Member { problem, scale, point } => {
            single::member(problem, scale, point, &solver, cli.dump_lp.as_deref(), &out)
        }
        Command::Ray { problem, scale, direction } => {
            single::ray(problem, scale, direction, &solver, cli.dump_lp.as_deref(), &out)
        }
        Command::BenchEx1(args) => bench::ex1(args, &out),
        Command::BenchEx2(args) => bench::ex2(args, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
