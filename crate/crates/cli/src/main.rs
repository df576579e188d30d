//! `wmpa`: simulate, calibrate and audit weak-measurement phase
//! amplification.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use config::RunConfig;
use error::CliResult;

#[derive(Parser)]
#[command(name = "wmpa", version, about = "Weak-measurement phase amplification: simulation and estimation")]
struct Cli {
    /// TOML config file; defaults apply to omitted keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// First seed; the configured seed count is kept.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for the CSV and JSON files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Zero-signal run and selection-ratio calibration.
    Calibrate,
    /// Calibrate, simulate every (theta, seed) and estimate the phase.
    Run,
    /// Repeat `run` over several tilts or magnifications.
    Sweep,
    /// Amplified protocol against the unamplified interferometer.
    Compare {
        /// Budget mode: equal-detected or equal-input.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Amplified phase against signal phase for h = 3, 5, 10.
    #[command(name = "reproduce-fig2")]
    ReproduceFig2,
    /// Audit the optical train against the abstract protocol.
    TrainCheck {
        /// Custom train document to audit.
        #[arg(long)]
        train: Option<PathBuf>,
        /// Write the reference train for protocol.delta_deg and exit.
        #[arg(long)]
        emit_train: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(dir) = cli.out {
        cfg.output.dir = Some(dir);
    }
    if let Some(seed) = cli.seed {
        match cli.command {
            Command::Calibrate => cfg.calibration.seed = seed,
            _ => cfg.set_first_seed(seed),
        }
    }
    match cli.command {
        Command::Calibrate => commands::calibrate(&cfg),
        Command::Run => commands::run(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Compare { mode } => {
            if let Some(m) = mode {
                cfg.compare.mode = m;
            }
            commands::compare(&cfg)
        }
        Command::ReproduceFig2 => commands::reproduce_fig2(&cfg),
        Command::TrainCheck { train, emit_train } => {
            if let Some(path) = emit_train {
                return commands::emit_train(&cfg, &path);
            }
            if train.is_some() {
                cfg.train_check.train = train;
            }
            commands::train_check(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("wmpa: {f}");
            ExitCode::from(f.category.exit_code())
        }
    }
}
