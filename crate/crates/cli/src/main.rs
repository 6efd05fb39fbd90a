//! `ofdb-forge`: generate, inspect and stream one-instance fractal datasets.
//!
//! Exit codes: 0 success, 1 domain error (search exhausted, I/O, bad
//! manifest or scores, verification discrepancies), 2 argument error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::{GenerateOpts, PlanOpts, PreviewOpts, PruneOpts, StatsOpts, VerifyOpts};

#[derive(Parser, Debug)]
#[command(
    name = "ofdb-forge",
    version,
    about = "One-instance fractal dataset synthesis"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "OFDB_FORGE_THREADS")]
    threads: Option<usize>,

    /// Print a machine-readable summary to stdout.
    #[arg(long, global = true)]
    json: bool,

    /// JSON file of option values; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search categories and render a dataset with its manifest.
    Generate(GenerateOpts),
    /// Render two augmented variants of one category and their difference.
    PreviewAug(PreviewOpts),
    /// Select an easy/hard category subset from difficulty scores.
    Prune(PruneOpts),
    /// Check a dataset against its manifest.
    Verify(VerifyOpts),
    /// Acceptance-statistic histograms and per-category spread.
    Stats(StatsOpts),
    /// Write the batch plan of one epoch as JSON.
    Plan(PlanOpts),
    /// Render one epoch as length-prefixed (label, PNG) frames.
    Stream(PlanOpts),
}

/// Bad flags or config values; exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub struct Globals {
    pub json: bool,
    pub threads: usize,
    pub file: Option<serde_json::Map<String, serde_json::Value>>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let threads = ofdb_core::par::configure_threads(cli.threads);
    let file = cli.config.as_deref().map(config::load_file).transpose()?;
    let g = Globals {
        json: cli.json,
        threads,
        file,
    };
    match &cli.command {
        Command::Generate(o) => commands::generate(&g, o),
        Command::PreviewAug(o) => commands::preview_aug(&g, o),
        Command::Prune(o) => commands::prune(&g, o),
        Command::Verify(o) => commands::verify(&g, o),
        Command::Stats(o) => commands::stats(&g, o),
        Command::Plan(o) => commands::plan(&g, o),
        Command::Stream(o) => commands::stream(&g, o),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
