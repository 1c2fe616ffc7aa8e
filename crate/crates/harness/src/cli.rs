//! Command-line interface: `run`, `validate` and `ingest` subcommands.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::experiments::{run_experiment, write_ingest_report};
use crate::weather::{ingest_weather, standardize_per_station};

#[derive(Parser)]
#[command(
    name = "proxnet",
    about = "Decentralized multitask learning experiments over graphs",
    version
)]
struct Cli {
    /// Worker threads for Monte-Carlo runs (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// Parse a weather dataset and write station/graph reports.
    Ingest {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Nearest neighbors per station.
        #[arg(long, default_value_t = 4)]
        k_neighbors: usize,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    if cli.workers > 0 {
        // ignore a second initialization (e.g. under tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut experiment = ExperimentConfig::from_path(&config)?;
            if let Some(seed) = seed {
                experiment.seed = seed;
            }
            if let Some(out) = out {
                experiment.out_dir = out;
            }
            let outcome = run_experiment(&experiment)?;
            println!("config digest: {}", outcome.digest);
            println!("rows: {}", outcome.rows.len());
            for (key, value) in &outcome.summary {
                println!("{key} = {value}");
            }
            println!("outputs written to {}", experiment.out_dir.display());
            Ok(())
        }
        Command::Validate { config } => {
            let experiment = ExperimentConfig::from_path(&config)?;
            println!("ok: {}", experiment.digest());
            Ok(())
        }
        Command::Ingest {
            dataset,
            out,
            k_neighbors,
        } => {
            let mut ingested = ingest_weather(&dataset, k_neighbors)?;
            standardize_per_station(&mut ingested.stations);
            write_ingest_report(
                &out,
                &ingested.stations,
                &ingested.network,
                &ingested.report,
            )?;
            println!(
                "stations: {}, dropped rows: {}, excluded stations: {}",
                ingested.stations.len(),
                ingested.report.dropped_rows,
                ingested.report.excluded_stations.len()
            );
            println!("reports written to {}", out.display());
            Ok(())
        }
    }
}

pub fn cli_main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::FAILURE
        }
    }
}
