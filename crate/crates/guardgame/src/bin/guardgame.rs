//! Thin command-line front end; all behavior lives in the library's
//! harness module.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use guardgame::harness::{self, CliError};

#[derive(Parser)]
#[command(
    name = "guardgame",
    about = "Two-player guardrail game: exact tabular dynamics and the adversarial training loop",
    version
)]
struct Cli {
    /// Root rng seed, overriding the config file's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config file (single-config runs).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Parallel experiment fan-out for `train` with several configs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate the best-response map of a JSON game description.
    FixedPoint { game: PathBuf },
    /// Evaluate Lipschitz constants and the contraction verdict.
    Bounds { params: PathBuf },
    /// Run the full adversarial training loop per experiment config.
    Train { configs: Vec<PathBuf> },
    /// Evaluate a saved classifier on a corpus file.
    Eval { model: PathBuf, corpus: PathBuf },
    /// Generate the synthetic corpus splits of an experiment config.
    Synth { config: PathBuf },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let out_dir = cli.out_dir.as_deref();
    let fallback = PathBuf::from("out");
    match &cli.command {
        Command::FixedPoint { game } => {
            harness::cmd_fixed_point(game, out_dir.unwrap_or(&fallback))
        }
        Command::Bounds { params } => harness::cmd_bounds(params, out_dir.unwrap_or(&fallback)),
        Command::Train { configs } => harness::cmd_train(configs, cli.seed, out_dir, cli.jobs),
        Command::Eval { model, corpus } => {
            harness::cmd_eval(model, corpus, out_dir.unwrap_or(&fallback))
        }
        Command::Synth { config } => harness::cmd_synth(config, cli.seed, out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!(
                "{}",
                serde_json::to_string(&error.record)
                    .unwrap_or_else(|_| error.record.error.clone())
            );
            ExitCode::from(error.exit_code as u8)
        }
    }
}
