//! `qsdc`: run sessions, sweeps, closed-form queries, key transfers and
//! self-checks from the command line.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! session stops because Eve was detected.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsdc_core::{BasisPolicy, EveKind, EveStrategySpec};

#[derive(Debug, Parser)]
#[command(name = "qsdc", version, about = "Single-qubit secure direct communication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one session and print its round transcripts.
    Simulate(SimulateArgs),
    /// Compare the survival formula with simulation over a grid of c and strategies.
    Sweep(SweepArgs),
    /// Evaluate the closed-form survival probabilities.
    Formula(FormulaArgs),
    /// Transfer a random key and distill it with privacy amplification.
    Keygen(KeygenArgs),
    /// Run the built-in consistency checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Master seed for every random draw.
    #[arg(long, env = "QSDC_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EveArgs {
    /// Eavesdropping strategy.
    #[arg(long, default_value = "none", value_parser = parse_eve)]
    eve: EveKind,
    /// Eve's basis policy; defaults to breidbart for measure-ba and random-zx otherwise.
    #[arg(long, value_parser = parse_policy)]
    policy: Option<BasisPolicy>,
}

impl EveArgs {
    fn spec(&self) -> EveStrategySpec {
        EveStrategySpec::new(self.eve, self.policy.unwrap_or(self.eve.default_policy()))
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Control-mode probability, in [0,1].
    #[arg(long, default_value_t = 0.1, value_parser = parse_probability)]
    c: f64,
    /// Message bits Bob sends.
    #[arg(long, default_value_t = 100, value_parser = parse_positive)]
    bits: u64,
    #[command(flatten)]
    eve: EveArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Round cap before the session is declared stuck.
    #[arg(long, value_parser = parse_positive)]
    max_rounds: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated control probabilities, each in [0,1).
    #[arg(long, required = true, value_delimiter = ',', value_parser = parse_open_probability)]
    c: Vec<f64>,
    /// Comma-separated strategies.
    #[arg(long, value_delimiter = ',', default_value = "none", value_parser = parse_eve)]
    eve: Vec<EveKind>,
    /// Basis policy applied to every strategy that uses one.
    #[arg(long, value_parser = parse_policy)]
    policy: Option<BasisPolicy>,
    /// Single-bit sessions per cell (at least 1000).
    #[arg(long, default_value_t = 10_000, value_parser = parse_trials)]
    trials: u64,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FormulaArgs {
    /// Control-mode probability, in [0,1].
    #[arg(long, value_parser = parse_probability)]
    c: f64,
    /// Per-control-round detection probability, in [0,1].
    #[arg(long, value_parser = parse_probability)]
    d: f64,
    /// Message bits.
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    n: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KeygenArgs {
    /// Control-mode probability, in [0,1].
    #[arg(long, default_value_t = 0.1, value_parser = parse_probability)]
    c: f64,
    /// Raw bits Bob sends (N).
    #[arg(long, default_value_t = 128, value_parser = parse_positive)]
    raw_bits: u64,
    /// Length of the distilled key (M, at most N).
    #[arg(long, default_value_t = 64, value_parser = parse_positive)]
    final_bits: u64,
    #[command(flatten)]
    eve: EveArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Write the keys here; they are printed to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Samples for each statistical check.
    #[arg(long, default_value_t = qsdc_core::selftest::DEFAULT_TRIALS, value_parser = parse_positive)]
    trials: u64,
    #[command(flatten)]
    seed: SeedArg,
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number; expected a value in the range [0,1]"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err("must lie in the range [0,1]".into())
    }
}

fn parse_open_probability(s: &str) -> Result<f64, String> {
    let v = parse_probability(s)?;
    if v < 1.0 {
        Ok(v)
    } else {
        Err("must lie in the range [0,1); c = 1 never delivers a message bit".into())
    }
}

fn parse_positive(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err("must be an integer of at least 1".into()),
    }
}

fn parse_trials(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(v) if v >= 1000 => Ok(v),
        _ => Err("must be an integer of at least 1000".into()),
    }
}

fn parse_eve(s: &str) -> Result<EveKind, String> {
    s.parse()
}

fn parse_policy(s: &str) -> Result<BasisPolicy, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Formula(args) => commands::formula(args),
        Command::Keygen(args) => commands::keygen(args),
        Command::Selftest(args) => commands::selftest(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
