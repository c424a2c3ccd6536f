//! `conicond`: condition measures of conic feasibility instances from the command line.

mod commands;
mod instance;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conic_condition::error::Error;

use instance::{GenCone, NormTag};

#[derive(Debug)]
pub enum CliError {
    /// Bad input; exit code 2.
    Validation(String),
    /// A solver or sampler failed on valid input; exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn from_core(e: Error) -> Self {
        match e {
            Error::NumericalFailure(_)
            | Error::SamplingExhausted(_)
            | Error::RankDeficientBlock(_)
            | Error::UnboundedPolytope => CliError::Numerical(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }

    pub fn context(self, field: &str) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{field}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{field}: {m}")),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::from_core(e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "conicond",
    version,
    about = "Condition measures for conic feasibility over subspaces"
)]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Print the report as a single JSON object.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for every sampled computation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Sample count for sampled measures and ill-posed subspace sampling.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Residuals above this value are flagged in the report notes.
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub tol: f64,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// nu, nu_bar, sigma, Sym and Theta of an instance.
    Measure { instance: PathBuf },
    /// dist and odist between the subspaces of two instances, in both orders.
    Dist { first: PathBuf, second: PathBuf },
    /// Goldman-Tucker partition and per-block measures (orthant only).
    Partition { instance: PathBuf },
    /// Operator norms and the Renegar sandwich of the instance map.
    Renegar { instance: PathBuf },
    /// Cone-automorphism preconditioning of the instance map.
    Precondition { instance: PathBuf },
    /// Runs every applicable theorem check.
    Certify { instance: PathBuf },
    /// Brute-force estimates of the distance to ill-posedness.
    Oracle { instance: PathBuf },
    /// Writes a seeded random instance.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = GenCone::Orthant)]
    pub cone: GenCone,
    #[arg(long, value_enum, default_value_t = NormTagArg::L2)]
    pub primal: NormTagArg,
    #[arg(long, value_enum, default_value_t = NormTagArg::L2)]
    pub tri: NormTagArg,
    /// Store the matrix as a linear map instead of a subspace.
    #[arg(long)]
    pub map: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum NormTagArg {
    L1,
    L2,
    Linf,
    InducedE,
    InducedEDual,
}

impl From<NormTagArg> for NormTag {
    fn from(t: NormTagArg) -> Self {
        match t {
            NormTagArg::L1 => NormTag::L1,
            NormTagArg::L2 => NormTag::L2,
            NormTagArg::Linf => NormTag::Linf,
            NormTagArg::InducedE => NormTag::InducedE,
            NormTagArg::InducedEDual => NormTag::InducedEDual,
        }
    }
}

fn run(cli: Cli) -> Result<Option<String>, CliError> {
    if let Some(t) = cli.flags.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
    }
    let f = &cli.flags;
    let report = match &cli.command {
        Command::Measure { instance } => commands::measure(instance, f)?,
        Command::Dist { first, second } => commands::dist(first, second, f)?,
        Command::Partition { instance } => commands::partition(instance, f)?,
        Command::Renegar { instance } => commands::renegar(instance, f)?,
        Command::Precondition { instance } => commands::precondition(instance, f)?,
        Command::Certify { instance } => commands::certify(instance, f)?,
        Command::Oracle { instance } => commands::oracle(instance, f)?,
        Command::Gen(args) => return commands::gen(args, f),
    };
    Ok(Some(if f.json {
        report.to_json() + "\n"
    } else {
        report.to_text()
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            if let Some(s) = out {
                print!("{s}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
