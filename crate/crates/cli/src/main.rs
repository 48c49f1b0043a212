use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use axns_core::config::parse_config;
use axns_core::run::{run_microscope, run_simulate, run_sweep, run_validate};
use axns_core::Error;
use clap::{Parser, Subcommand};
use log::error;

/// Axisymmetric Navier-Stokes with swirl and zoom diagnostics.
#[derive(Parser)]
#[command(name = "axns", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step a configuration, writing diagnostics and snapshots.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        /// Continue from the last snapshot in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Rescale almost-maximal points of stored snapshots and measure closeness.
    Microscope {
        #[arg(short, long)]
        config: PathBuf,
        /// Snapshot directory (defaults to the configured output directory).
        #[arg(short, long)]
        snapshots: Option<PathBuf>,
    },
    /// Run the invariant suite and the convergence study.
    Validate {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Run every point of the `[sweep]` table in sequence.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// Directory for the per-run outputs and `summary.csv`.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonFinite { .. }
        | Error::CflViolation { .. }
        | Error::PoissonNotConverged { .. }
        | Error::ZeroSpeed
        | Error::FullyMasked => 2,
        _ => 1,
    }
}

fn read(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Simulate { config, resume } => {
            let cfg = parse_config(&read(&config)?)?;
            let out = run_simulate(&cfg, resume)?;
            println!("{} steps, t = {}", out.steps, out.diagnostics.last().map_or(0.0, |d| d.t));
            Ok(0)
        }
        Command::Microscope { config, snapshots } => {
            let cfg = parse_config(&read(&config)?)?;
            let dir = snapshots.unwrap_or_else(|| cfg.output_dir.clone());
            let rep = run_microscope(&cfg, &dir)?;
            println!("{} rows, {} skipped", rep.rows.len(), rep.skipped);
            Ok(0)
        }
        Command::Validate { config } => {
            let cfg = parse_config(&read(&config)?)?;
            let rep = run_validate(&cfg)?;
            for r in &rep.rows {
                println!(
                    "{} {:<12} {:<40} value={:.6e} bound={:.6e} margin={:.3e}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.check,
                    r.quantity,
                    r.value,
                    r.bound,
                    r.margin
                );
            }
            Ok(if rep.pass() { 0 } else { 3 })
        }
        Command::Sweep { config, out } => {
            let mut doc: toml::Value = toml::from_str(&read(&config)?)
                .map_err(|e| Error::config("<document>", e.to_string()))?;
            let table = doc
                .as_table_mut()
                .ok_or_else(|| Error::config("<document>", "expected a table"))?;
            let sweep: BTreeMap<String, Vec<toml::Value>> = match table.remove("sweep") {
                Some(v) => v.try_into().map_err(|e: toml::de::Error| Error::config("sweep", e.to_string()))?,
                None => return Err(Error::config("sweep", "missing [sweep] table")),
            };
            let base_out = table
                .get("output_dir")
                .and_then(|v| v.as_str())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out"));
            let out = out.unwrap_or(base_out);
            let rows = run_sweep(&doc, &sweep, &out)?;
            println!("{} runs, summary in {}", rows.len(), out.join("summary.csv").display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
