//! `infogain` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a checked property or protocol premise
//! fails (a JSON diagnostic is printed), 2 for argument and input errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use infogain_core::rng::{DEFAULT_SEED, SEED_ENV};

#[derive(Parser, Debug)]
#[command(name = "infogain", version, about = "Information gain of quantum measurements")]
pub struct Cli {
    /// Global seed; per-task seeds are derived from it.
    #[arg(long, global = true, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Force JSON output.
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,

    /// Force CSV output.
    #[arg(long, global = true)]
    pub csv: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Default,
    Json,
    Csv,
}

impl Cli {
    pub fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            Format::Default
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// One-shot or von Neumann entropy of a state.
    Entropy(EntropyArgs),
    /// Information gain I(M), maximized over input states.
    InfoGain(InfoGainArgs),
    /// Feedback or non-feedback rate region C(S).
    RateRegion(RateRegionArgs),
    /// Protocol simulations.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Typical sets and projectors.
    #[command(subcommand)]
    Typicality(TypicalityCommand),
    /// Run a randomized property suite.
    Verify(VerifyArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
pub enum EntropyName {
    DMax,
    HMin,
    HMax,
    H0,
    HR,
    IMax,
    SmoothH0,
    SmoothIMax,
    VonNeumann,
}

#[derive(Args, Debug)]
pub struct EntropyArgs {
    pub name: EntropyName,
    /// State file, or `{"rho": ..., "sigma": ...}` for d_max.
    #[arg(long)]
    pub state: PathBuf,
    /// Second state for d_max when `--state` holds a single state.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Subsystem split such as `0|1` or `0,2|1`.
    #[arg(long)]
    pub partition: Option<String>,
}

#[derive(Args, Debug)]
pub struct InfoGainArgs {
    #[arg(long)]
    pub measurement: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
}

#[derive(Args, Debug)]
#[group(skip)]
#[command(group(ArgGroup::new("kind").required(true).args(["feedback", "non_feedback"])))]
pub struct RateRegionArgs {
    #[arg(long)]
    pub measurement: PathBuf,
    #[arg(long)]
    pub feedback: bool,
    #[arg(long)]
    pub non_feedback: bool,
    /// Largest internal-measurement size searched (non-feedback only).
    #[arg(long)]
    pub w_cap: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    /// Where the decomposition witnesses are written in CSV mode.
    #[arg(long, default_value = "rate-region-witnesses.json")]
    pub witness_out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum SimulateCommand {
    /// State merging with the permutation extractor.
    Merge(ProtocolArgs),
    /// State splitting (coherent by default).
    Split(SplitArgs),
    /// Binned splitting; needs `--eps2`.
    BinnedSplit(ProtocolArgs),
    /// Binned-splitting cost against the converse bound on random states.
    Sandwich(SandwichArgs),
}

#[derive(Args, Debug)]
pub struct ProtocolArgs {
    /// Classically coherent state file.
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub eps2: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long)]
    pub classical: bool,
}

#[derive(Args, Debug)]
pub struct SandwichArgs {
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps2: f64,
    /// Outcomes per random state.
    #[arg(long, default_value_t = 4)]
    pub outcomes: usize,
}

#[derive(Subcommand, Debug)]
pub enum TypicalityCommand {
    /// Check the typical-set and typical-projector properties.
    Verify(TypicalityArgs),
}

#[derive(Args, Debug)]
pub struct TypicalityArgs {
    #[arg(long)]
    pub dist: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub delta: f64,
    /// Target for the probability statements.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// Exponent constant; the tightest valid value is used when omitted.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// appendix-lemmas, protocols-sandwich, typicality, uncertainty or rates.
    pub suite: String,
    /// Multiplier on every invariant's trial count.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::dispatch(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.code())
        }
    }
}
