use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heine_harness::{run, Command, HarnessError, LoadedConfig, RunOptions};

#[derive(Parser)]
#[command(name = "heine", version, about = "Particle counts and fluctuations for radial Coulomb gases")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; falls back to HEINE_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Heine and discrete normal parameters, CGF curves and fluctuation coefficients.
    Predict,
    /// Exact and asymptotic norm tables.
    Norms,
    /// Monte Carlo counts and linear statistics.
    Simulate,
    /// Gaussian fluctuation coefficients against exact finite-n moments.
    Fluct,
    /// Gap constants for an ellipse geometry.
    Conformal,
    /// Partition functions, smooth fit and oscillatory term.
    FreeEnergy,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Predict => Command::Predict,
            Cmd::Norms => Command::Norms,
            Cmd::Simulate => Command::Simulate,
            Cmd::Fluct => Command::Fluct,
            Cmd::Conformal => Command::Conformal,
            Cmd::FreeEnergy => Command::FreeEnergy,
        }
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, HarnessError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("HEINE_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| HarnessError::Config(format!("HEINE_THREADS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>, HarnessError> {
    if let Some(t) = threads(cli.threads)? {
        if t == 0 {
            return Err(HarnessError::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    let path = cli
        .config
        .ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let cfg = LoadedConfig::load(&path)?;
    let opts = RunOptions {
        seed: cli.seed,
        out: cli.out,
    };
    run(cli.command.into(), &cfg, &opts)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("heine: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
