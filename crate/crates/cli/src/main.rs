//! `subdiff`: forward simulations and inclusion reconstructions for the
//! time-fractional diffusion model, driven by a TOML run configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use subdiff_cli::commands::{self, Output};
use subdiff_cli::config::RunConfig;
use subdiff_cli::failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "subdiff", version, about = "Subdiffusion forward solver and inclusion locators")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML, `version = 1`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides `noise.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Solve with and without the inclusions for U = x1 and U = x2.
    Forward,
    /// Locate one inclusion from two probe segments.
    LocateOne,
    /// Image several inclusions with the truncated-SVD indicator.
    LocateMulti,
    /// Compare boundary and interior evaluations of the measurement.
    OracleCheck,
    /// Repeat a reconstruction over sizes, aspect ratios and noise levels.
    Sweep,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let Some(path) = &cli.config else {
        return Err(Failure::config("--config <path> is required"));
    };
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.noise.seed = seed;
    }
    let cfg = cfg.resolved();
    cfg.validate()?;
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::config(format!("--jobs: {e}")))?;
    }
    let out = Output::create(&cli.out)?;
    match cli.command {
        Command::Forward => commands::cmd_forward(&cfg, &out),
        Command::LocateOne => commands::cmd_locate_one(&cfg, &out),
        Command::LocateMulti => commands::cmd_locate_multi(&cfg, &out),
        Command::OracleCheck => commands::cmd_oracle_check(&cfg, &out),
        Command::Sweep => commands::cmd_sweep(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
