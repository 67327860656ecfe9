//! `sts`: command-line workbench for Steiner triple system experiments.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "sts", version, about = "Steiner triple system experiments: generation, audits, matchings, absorbers")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct Global {
    /// Master seed; trial i uses a stream derived from (seed, i).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1)]
    pub trials: usize,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Add wall-clock seconds per trial (breaks byte-identical reruns).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate systems: triangle removal, binomial, coupling, or full STS
    Gen(commands::gen::GenArgs),
    /// Quasirandomness, upper-quasirandomness, discrepancy and goodness checks
    Audit(commands::audit::AuditArgs),
    /// Pack edge-disjoint perfect matchings by backtracking search
    Pack(commands::matchings::PackArgs),
    /// Decide resolvability by exact cover
    Resolve(commands::matchings::ResolveArgs),
    /// Greedy decomposition of a linear system into matchings
    Decompose(commands::matchings::DecomposeArgs),
    /// Search for absorbers, templates and absorbing structures
    Absorb(commands::absorb::AbsorbArgs),
    /// Random partition into G_i, H_i, F_i and Q, with its audit
    Partition(commands::partition::PartitionArgs),
    /// Almost-resolution by partition, bridges and completion
    Pipeline(commands::pipeline::PipelineArgs),
    /// Monte Carlo check of the binomial coupling
    CoupleTest(commands::couple::CoupleArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(t) = cli.global.threads {
        anyhow::ensure!(t > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    anyhow::ensure!(cli.global.trials > 0, "--trials must be positive");
    let g = &cli.global;
    match &cli.command {
        Command::Gen(a) => commands::gen::run(g, a),
        Command::Audit(a) => commands::audit::run(g, a),
        Command::Pack(a) => commands::matchings::pack(g, a),
        Command::Resolve(a) => commands::matchings::resolve(g, a),
        Command::Decompose(a) => commands::matchings::decompose(g, a),
        Command::Absorb(a) => commands::absorb::run(g, a),
        Command::Partition(a) => commands::partition::run(g, a),
        Command::Pipeline(a) => commands::pipeline::run(g, a),
        Command::CoupleTest(a) => commands::couple::run(g, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
