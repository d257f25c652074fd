use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use driftwalk::experiments::{run, ExperimentConfig, Kind};
use driftwalk::Error;

/// Seeded recurrence experiments for negative-drift Markov chains and
/// random walks on lattices.
///
/// Exit status: 0 pass, 1 fail, 2 configuration error, 3 numerical error.
#[derive(Debug, Parser)]
#[command(name = "driftwalk", version)]
struct Cli {
    /// Experiment config (`key = value` lines under `[section]` headers).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed; overrides the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory [default: out/<experiment>].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One trajectory: drift values and level occupation.
    Simulate,
    /// Return-time tails and the Foster bound.
    Returns,
    /// Calibrated mass-escape profile `P(f(X_n) > R)`.
    MassProfile,
    /// Occupation fractions of `{f <= R}` along one trajectory.
    Occupation,
    /// Empirical stochastic dominance of the one-step increments.
    SdCheck,
    /// Chains with negative drift that still lose mass.
    Counterexample {
        #[command(subcommand)]
        which: Counterexample,
    },
    /// Lyapunov exponents of the exterior powers.
    Lyapunov,
    /// `f_A` on sampled lattices high in the cusp.
    DriftEval,
    /// Uniqueness at the top, probable decrease and variation control of `f_A`.
    DriftCheck,
    /// Cesaro averages of primitive ball counts against the Haar mean.
    Equidistribute,
}

#[derive(Debug, Subcommand)]
enum Counterexample {
    /// Escape of mass at the checkpoints of a greedy schedule.
    Mass,
    /// Escape of the empirical measures.
    Empirical,
}

impl Command {
    fn kind(&self) -> Kind {
        match self {
            Command::Simulate => Kind::Simulate,
            Command::Returns => Kind::Returns,
            Command::MassProfile => Kind::MassProfile,
            Command::Occupation => Kind::Occupation,
            Command::SdCheck => Kind::SdCheck,
            Command::Counterexample { which: Counterexample::Mass } => Kind::CounterexampleMass,
            Command::Counterexample { which: Counterexample::Empirical } => Kind::CounterexampleEmpirical,
            Command::Lyapunov => Kind::Lyapunov,
            Command::DriftEval => Kind::DriftEval,
            Command::DriftCheck => Kind::DriftCheck,
            Command::Equidistribute => Kind::Equidistribute,
        }
    }
}

fn load(cli: &Cli) -> driftwalk::Result<ExperimentConfig> {
    match (&cli.config, cli.seed) {
        (Some(path), seed) => ExperimentConfig::load(path, seed),
        (None, Some(seed)) => Ok(ExperimentConfig::with_seed(seed)),
        (None, None) => Err(Error::Config { line: None, message: "missing key `seed` (pass --config or --seed)".into() }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = cli.command.kind();
    let result = load(&cli).and_then(|config| {
        let out = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
        run(&config, kind, &out)
    });
    match result {
        Ok(summary) => {
            print!("{}", summary.render());
            if summary.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("driftwalk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
