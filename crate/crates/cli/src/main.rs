//! `gefrfe`: fractional spectral graph embeddings from the command line.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 data error,
//! 3 numerical failure.

mod commands;
mod config;
mod fetch;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::config::RunArgs;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] gefrfe::Error),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(_) | CliError::Data(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gefrfe", version, about = "Fractional spectral graph embeddings and kNN evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolMode {
    /// Every feature at α = 1
    Geffe,
    /// Every feature at its own best α on the grid
    Gefrfe,
    /// Every feature at --alpha (and --alpha-map)
    Fixed,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dataset summary: graphs, classes, mean vertices and edges
    Info {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Show dataset sources and verify checksums of downloaded files
    Fetch {
        #[arg(long, default_value = "data")]
        data_dir: std::path::PathBuf,
        /// Restrict to one preset dataset
        #[arg(long)]
        dataset: Option<String>,
        /// Record checksums of the files present into SHA256SUMS
        #[arg(long)]
        write_checksums: bool,
    },
    /// Write the embedding matrix as CSV (and JSON with --out)
    Embed {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Accuracy of the full filter x power embedding at every α of the grid
    Gridsearch {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Greedy forward selection over (filter, ω) features
    Forward {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "gefrfe")]
        mode: PoolMode,
    },
    /// Accuracy of all (filter, ω) features combined
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "gefrfe")]
        mode: PoolMode,
    },
    /// Per-graph embedding time against node count
    BenchScaling {
        #[arg(long, default_value = "16,32,64,128")]
        sizes: String,
        #[arg(long, default_value_t = 4)]
        graphs_per_size: usize,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path stem for the JSON report
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Info { run } => commands::info(&run.resolve()?),
        Command::Fetch {
            data_dir,
            dataset,
            write_checksums,
        } => fetch::fetch(&data_dir, dataset.as_deref(), write_checksums),
        Command::Embed { run } => commands::embed(&run.resolve()?),
        Command::Gridsearch { run } => commands::gridsearch(&run.resolve()?),
        Command::Forward { run, mode } => commands::forward(&run.resolve()?, mode),
        Command::Evaluate { run, mode } => commands::evaluate(&run.resolve()?, mode),
        Command::BenchScaling {
            sizes,
            graphs_per_size,
            rounds,
            seed,
            out,
        } => commands::bench_scaling(&sizes, graphs_per_size, rounds, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
