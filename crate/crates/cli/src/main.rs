//! `glocalsync` command-line tool.
//!
//! Exit status: 0 on success with nothing to report, 1 when an audit finds
//! inconsistencies, 2 on any input or usage error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "glocalsync",
    version,
    about = "Scoped content propagation and consistency auditing"
)]
pub struct Cli {
    #[command(flatten)]
    pub opts: Options,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Options {
    /// Site network JSON.
    #[arg(long, global = true, value_name = "PATH")]
    pub network: Option<PathBuf>,
    /// Content catalog JSON.
    #[arg(long, global = true, value_name = "PATH")]
    pub catalog: Option<PathBuf>,
    /// Event log, one JSON record per line.
    #[arg(long, global = true, value_name = "PATH")]
    pub log: Option<PathBuf>,
    /// Comparison dataset (TSV).
    #[arg(long, global = true, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    /// Separate dataset for the pairwise view.
    #[arg(long, global = true, value_name = "PATH")]
    pub pairs: Option<PathBuf>,
    /// Comma-separated site order for pairwise counting.
    #[arg(long, global = true, value_name = "CODES", value_delimiter = ',')]
    pub site_order: Option<Vec<String>>,
    /// Output directory. Nothing is written when unset.
    #[arg(long, global = true, value_name = "DIR", env = "GLOCALSYNC_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub theta_global: Option<u32>,
    #[arg(long, global = true, value_name = "N")]
    pub theta_local: Option<u32>,
    #[arg(long, global = true, value_name = "N")]
    pub theta_comparable: Option<u32>,
    #[arg(long, global = true, value_name = "N")]
    pub theta_neutral: Option<u32>,
    /// Overrides the scenario seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Also run the scenario with propagation disabled.
    #[arg(long, global = true)]
    pub baseline: bool,
    /// Ticks allowed for bounded propagation tasks.
    #[arg(long, global = true, value_name = "N")]
    pub bounded_deadline: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a network and, optionally, a catalog.
    Validate,
    /// List the replicas each component of an item reaches.
    Scope { item: String },
    /// Replay an event log and report inconsistent replicas.
    Audit,
    /// Replay an event log and list pending tasks in execution order.
    Plan,
    /// Aggregate a comparison dataset into propagation tables and labels.
    Analyze,
    /// Run a simulation scenario.
    Simulate { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = std::panic::catch_unwind(|| commands::run(&cli).map_err(|e| e.to_string()));
    match result {
        Ok(Ok(status)) => ExitCode::from(status),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}
