use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bratu_vqa::optim::Branch;
use bratu_vqa_cli::commands::{cmd_classical, cmd_compare, cmd_continue, cmd_solve};
use bratu_vqa_cli::{CliError, Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "bratu-vqa", version, about = "Variational quantum solver for the 1D Bratu problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Flat TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Adam iterations per training run.
    #[arg(long)]
    iterations: Option<usize>,
    /// Multi-start count for upper-branch seeding.
    #[arg(long)]
    starts: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pseudo arc-length continuation and fixed-lambda profiles.
    Classical {
        #[command(flatten)]
        common: Common,
        /// Replaces the configured profile lambdas.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Train the circuit at one lambda.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value = "lower")]
        branch: Branch,
    },
    /// Predictor-corrector sweep along one branch.
    Continue {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "lower")]
        branch: Branch,
    },
    /// VQA against classical profiles on both branches.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Replaces the configured comparison lambdas.
        #[arg(long)]
        lambda: Option<f64>,
    },
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let overrides =
        Overrides { seed: common.seed, out_dir: common.out.clone(), iterations: common.iterations, n_starts: common.starts };
    RunConfig::load(common.config.as_deref(), &overrides)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let outcome = match cli.command {
        Command::Classical { common, lambda } => {
            let mut cfg = load(&common)?;
            if let Some(l) = lambda {
                cfg.profile_lambdas = vec![l];
            }
            cmd_classical(&cfg)
        }
        Command::Solve { common, lambda, branch } => cmd_solve(&load(&common)?, lambda, branch),
        Command::Continue { common, branch } => cmd_continue(&load(&common)?, branch),
        Command::Compare { common, lambda } => {
            let mut cfg = load(&common)?;
            if let Some(l) = lambda {
                cfg.compare_lambdas = vec![l];
            }
            cmd_compare(&cfg)
        }
    }?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
