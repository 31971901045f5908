use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use event_forecast::commands::{cmd_calibrate, cmd_diagnose, cmd_fit, cmd_predict, cmd_simulate};
use event_forecast::io::RunConfig;
use event_forecast::{Error, Result};

/// Prediction intervals for the number of additional events in an
/// event-driven trial.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare event-time models by information criteria.
    Fit(Common),
    /// Bootstrap prediction intervals for each configured horizon.
    Predict(Common),
    /// Run the configured simulation scenarios.
    Simulate(Common),
    /// Calibrate the baseline scale of each configured scenario.
    Calibrate(Common),
    /// Kaplan-Meier curves on the transformed survival scales.
    Diagnose(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn print_csv<T: serde::Serialize>(rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let (Command::Fit(common)
    | Command::Predict(common)
    | Command::Simulate(common)
    | Command::Calibrate(common)
    | Command::Diagnose(common)) = &cli.command;
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    }
    let output = common.output.clone().or_else(|| cfg.output.clone());
    if let Some(dir) = &output {
        std::fs::create_dir_all(dir)?;
    }
    let out = output.as_deref();
    match cli.command {
        Command::Fit(_) => print_csv(&cmd_fit(&cfg, out)?),
        Command::Predict(_) => print_csv(&cmd_predict(&cfg, None, out)?.rows),
        Command::Simulate(_) => print_csv(&cmd_simulate(&cfg, None, out)?),
        Command::Calibrate(_) => print_csv(&cmd_calibrate(&cfg, out)?),
        Command::Diagnose(_) => print_csv(&cmd_diagnose(&cfg, out)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
