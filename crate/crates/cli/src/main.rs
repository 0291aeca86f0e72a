//! `vpset`: the vantage-point redundancy pipeline.
//!
//! Every stage reads a TOML config (`--config`), writes its artifact plus a
//! sha256 manifest into the output directory and is deterministic: rerunning
//! a stage with unchanged inputs reproduces its artifact byte for byte.
//!
//! Exit codes: 0 success, 1 configuration error (the offending field path is
//! printed), 2 missing upstream checkpoint (the stage to run first is named).

mod config;
mod io;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, PipelineConfig};
use stages::MissingCheckpoint;

#[derive(Parser)]
#[command(
    name = "vpset",
    version,
    about = "quantify vantage-point redundancy in BGP route streams and pick low-redundancy sets"
)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for stages that can use them.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse the archive and snapshots and report basic statistics.
    IngestCheck,
    /// Detect new-AS-link candidate events -> candidates.txt.
    DetectEvents,
    /// Draw the balanced period/category event sample -> events.txt.
    SampleEvents,
    /// Compute per-event per-VP feature vectors -> features.txt.
    Features,
    /// Reduce feature vectors to pairwise redundancy scores -> scores.csv.
    Score,
    /// Greedy volume-budgeted VP selection -> selection.csv.
    Select {
        /// Candidate-pool fraction; overrides the config value.
        #[arg(long)]
        alpha: Option<f64>,
        /// Update-volume budget; overrides the config value.
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Compare greedy use-case selection against naive baselines -> benchmark.csv.
    Benchmark {
        /// Coverage fraction to reach; overrides the config value.
        #[arg(long)]
        target: Option<f64>,
    },
    /// Simulated-internet deployment coverage sweep -> simulate.csv.
    Simulate {
        /// Number of ASes in each generated topology.
        #[arg(long, default_value_t = 600)]
        n: usize,
        /// Monitor budgets: comma list of values or lo:hi[:step] ranges.
        #[arg(long, default_value = "20")]
        k_sweep: String,
        /// Comma list of deployment strategies.
        #[arg(long, default_value = "random,distance_based,greedy_specific")]
        strategies: String,
        /// Number of topology seeds (config seed, config seed + 1, ...).
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<PipelineConfig> {
    let path = path.as_ref().ok_or_else(|| ConfigError {
        field: "(cli)".to_string(),
        message: "--config <path> is required".to_string(),
    })?;
    Ok(PipelineConfig::load(path)?)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = load_config(&cli.config)?;
    match &cli.cmd {
        Cmd::IngestCheck => stages::ingest_check(&cfg),
        Cmd::DetectEvents => stages::detect_events(&cfg),
        Cmd::SampleEvents => stages::sample_events(&cfg),
        Cmd::Features => stages::features(&cfg),
        Cmd::Score => stages::score(&cfg),
        Cmd::Select { alpha, budget } => stages::select(&cfg, *alpha, *budget),
        Cmd::Benchmark { target } => stages::benchmark(&cfg, *target),
        Cmd::Simulate {
            n,
            k_sweep,
            strategies,
            seeds,
        } => stages::simulate(&cfg, *n, k_sweep, strategies, *seeds, cli.jobs),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<MissingCheckpoint>().is_some() {
                ExitCode::from(2)
            } else {
                // config errors and runtime failures both map to 1
                ExitCode::from(1)
            }
        }
    }
}
