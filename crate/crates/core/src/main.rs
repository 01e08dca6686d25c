use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adamlab::cli::{self, CliError};

#[derive(Parser)]
#[command(name = "adamlab", version, about = "Adaptive-optimizer dynamics laboratory")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimizer and write its trajectory record.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep Adam over an (a, b) grid and write a heatmap CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Distance between discrete runs and their continuous-time limit.
    CompareOde {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Classify a trajectory record.
    Classify {
        trajectory: PathBuf,
        /// Classifier thresholds as JSON, overriding those recorded in the file.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare analytic gradients against central differences.
    GradCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, out, seed } => {
            cli::cmd_run(cli::load_config(&config)?, out.as_deref(), seed, stdout).map(drop)
        }
        Command::Sweep { config, out, seed, jobs } => {
            cli::cmd_sweep(cli::load_config(&config)?, out.as_deref(), seed, jobs, stdout).map(drop)
        }
        Command::CompareOde { config, out, seed } => {
            cli::cmd_compare_ode(cli::load_config(&config)?, out.as_deref(), seed, stdout).map(drop)
        }
        Command::Classify { trajectory, config } => {
            let classifier = config.map(|p| cli::load_config(&p)).transpose()?;
            cli::cmd_classify(&trajectory, classifier, stdout).map(drop)
        }
        Command::GradCheck { config, seed } => cli::cmd_grad_check(cli::load_config(&config)?, seed, stdout).map(drop),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match dispatch(args.command, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("adamlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
