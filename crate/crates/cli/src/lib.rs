//! Command-line front-end: `reduce`, `solve`, `gaps`, `gen` and `ensemble`.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 unbounded
//! objective, 4 qubit cap exceeded, 1 numerical failure.

pub mod commands;
pub mod error;
pub mod formats;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcmdo_core::EncodingPolicy;

use crate::commands::*;
pub use crate::error::{exit, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "qcmdo",
    version,
    about = "Reduce mixed discrete-continuous quadratic problems to QUBO and analyse them"
)]
pub struct Cli {
    /// Suppress summary lines.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce a problem file to a QUBO file (plus `.enc` decode sidecar).
    Reduce {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyArg::Binary)]
        policy: PolicyArg,
        /// Write a JSON report of sizes, normalizers and timing.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Minimize a QUBO file.
    Solve {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Exhaustive)]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        sweeps: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        /// Print the k lowest states (exhaustive only).
        #[arg(long, default_value_t = 1)]
        bottom: usize,
    },
    /// Sweep the annealing gap of a QUBO file over w in [0, 1].
    Gaps {
        input: PathBuf,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        refine: bool,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate example instances.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Gap and Hamming-distance statistics over Poisson instances.
    Ensemble(EnsembleCli),
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Poisson charge-reconstruction instances.
    Poisson {
        #[arg(long)]
        n: usize,
        /// Every configuration of the charges.
        #[arg(long)]
        all_instances: bool,
        /// Seed for one uniformly drawn configuration (default 0).
        #[arg(long, conflicts_with = "all_instances")]
        seed: Option<u64>,
        /// Explicit configuration as a 0/1 string.
        #[arg(long, conflicts_with_all = ["all_instances", "seed"])]
        true_s: Option<String>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Max-Cut instance from an edge-list file.
    Maxcut {
        graph: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Output file stem; defaults to the graph file's stem.
        #[arg(long)]
        stem: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct EnsembleCli {
    #[arg(long)]
    pub n: usize,
    #[arg(long, conflicts_with = "samples", required_unless_present = "samples")]
    pub all: bool,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip the spectrum sweeps; only Hamming distances are computed.
    #[arg(long)]
    pub classical_only: bool,
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    /// Binary expansion where the set allows it, one-hot otherwise.
    Binary,
    OneHot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exhaustive,
    Sa,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let quiet = cli.quiet;
    match cli.command {
        Command::Reduce { input, output, policy, report } => {
            let policy = match policy {
                PolicyArg::Binary => EncodingPolicy::PreferBinaryExpansionElseOneHot,
                PolicyArg::OneHot => EncodingPolicy::ForceOneHot,
            };
            reduce_cmd(&ReduceArgs { input, output, policy, report, quiet }, out)
        }
        Command::Solve { input, method, seed, sweeps, restarts, bottom } => {
            let method = match method {
                MethodArg::Exhaustive => Method::Exhaustive,
                MethodArg::Sa => Method::Sa,
            };
            solve_cmd(&SolveArgs { input, method, seed, sweeps, restarts, bottom }, out)
        }
        Command::Gaps { input, grid, refine, out: csv } => {
            gaps_cmd(&GapsArgs { input, grid, refine, out: csv, quiet }, out)
        }
        Command::Gen(GenCommand::Poisson { n, all_instances, seed, true_s, out_dir }) => {
            gen_poisson_cmd(&GenPoissonArgs { n, all_instances, seed, true_s, out_dir, quiet }, out)
        }
        Command::Gen(GenCommand::Maxcut { graph, out_dir, stem }) => {
            gen_maxcut_cmd(&GenMaxcutArgs { graph, out_dir, stem, quiet }, out)
        }
        Command::Ensemble(e) => ensemble_cmd(
            &EnsembleArgs {
                n: e.n,
                all: e.all,
                samples: e.samples,
                seed: e.seed,
                out: e.out,
                classical_only: e.classical_only,
                grid: e.grid,
                quiet,
            },
            out,
        ),
    }
}
