//! `hrch`: simulations, reductions and invariant reports for charged
//! particles on the Heisenberg group.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{load_config, CliError, RunContext};

#[derive(Parser)]
#[command(name = "hrch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV and JSON files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured system and write its trajectory.
    Simulate(Common),
    /// Reduce at the configured level and integrate the reduced system.
    Reduce(Common),
    /// Run named invariant checks.
    Check {
        #[command(flatten)]
        common: Common,
        /// Run every default check, ignoring `check.names`.
        #[arg(long)]
        all: bool,
    },
    /// Compare the circle-bundle geodesic flow with the magnetic particle.
    KkCompare(Common),
    /// Run the matching checks on a named fixture.
    MrCheck(Common),
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (common, all) = match &cli.command {
        Command::Check { common, all } => (common, *all),
        Command::Simulate(c) | Command::Reduce(c) | Command::KkCompare(c) | Command::MrCheck(c) => (c, false),
    };
    let cfg = load_config(common.config.as_deref())?;
    let ctx = RunContext {
        out: common.out.clone(),
        seed: common.seed.unwrap_or(cfg.run.seed),
    };
    let report = match cli.command {
        Command::Simulate(_) => commands::simulate(&cfg, &ctx)?,
        Command::Reduce(_) => commands::reduce(&cfg, &ctx)?,
        Command::Check { .. } => commands::check(&cfg, &ctx, all)?,
        Command::KkCompare(_) => commands::kk_compare(&cfg, &ctx)?,
        Command::MrCheck(_) => commands::mr_check(&cfg, &ctx)?,
    };
    for r in &report.records {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {:<44} {:>10.3e} <= {:.1e}",
            r.name, r.max_residual, r.threshold
        );
    }
    let failed = report.records.iter().filter(|r| !r.passed).count();
    println!("{} records, {failed} failed", report.records.len());
    Ok(report.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
