use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irlab_experiments::config::{Emit, ExperimentConfig};
use irlab_experiments::runs::{execute, Command};
use irlab_experiments::AppError;

/// Windows of low effective rank in deep matrix factorization: certify,
/// simulate and stress-test them under noise.
#[derive(Debug, Parser)]
#[command(name = "irlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Print K_ε, gap requirements, α*, η*, T0, T1 and the window verdicts.
    Certify(Common),
    /// Noiseless effective-rank trajectories with their windows.
    Observe(Common),
    /// Perturbed runs across noise levels.
    Noise(Common),
    /// Stability reports over noise levels and seeds.
    Bounds(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides IRLAB_OUT and the config).
    #[arg(long, env = "IRLAB_OUT")]
    out: Option<PathBuf>,
    /// Noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive noise seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Step size, overriding the config.
    #[arg(long)]
    eta: Option<f64>,
    /// Comma-separated subset of csv,svg,report.
    #[arg(long, value_delimiter = ',', value_parser = parse_emit)]
    emit: Option<Vec<Emit>>,
    #[arg(long, conflicts_with = "linear_x")]
    log_x: bool,
    #[arg(long)]
    linear_x: bool,
    /// Exit with status 3 when a hypothesis or certification fails.
    #[arg(long)]
    strict: bool,
}

fn parse_emit(s: &str) -> Result<Emit, String> {
    match s.trim() {
        "csv" => Ok(Emit::Csv),
        "svg" => Ok(Emit::Svg),
        "report" => Ok(Emit::Report),
        other => Err(format!("unknown output kind {other:?} (expected csv, svg or report)")),
    }
}

fn configure(c: &Common) -> Result<ExperimentConfig, AppError> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    if let Some(s) = c.seed {
        cfg.noise.seed = s;
    }
    if let Some(s) = c.seeds {
        cfg.noise.seeds = s;
    }
    if let Some(e) = c.eta {
        cfg.dynamics.eta = e;
    }
    if let Some(e) = &c.emit {
        cfg.emit = e.clone();
    }
    if c.log_x {
        cfg.log_x = true;
    }
    if c.linear_x {
        cfg.log_x = false;
    }
    cfg.strict |= c.strict;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), AppError> {
    let (command, common) = match &cli.command {
        Sub::Certify(c) => (Command::Certify, c),
        Sub::Observe(c) => (Command::Observe, c),
        Sub::Noise(c) => (Command::Noise, c),
        Sub::Bounds(c) => (Command::Bounds, c),
    };
    let cfg = configure(common)?;
    let outcome = execute(command, &cfg, &cfg.output_dir)?;
    print!("{}", outcome.stdout);
    println!("wrote {} files to {}", outcome.files.len(), cfg.output_dir.display());
    if cfg.strict && !outcome.regime_failures.is_empty() {
        return Err(AppError::OutOfRegime(outcome.regime_failures.join("; ")));
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("irlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
