use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gram_cli::config::{parse_method, Overrides};
use gram_cli::runner;

/// Train and evaluate ratio-matching generative models on synthetic
/// benchmarks.
#[derive(Parser)]
#[command(name = "gram-cli", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one training configuration and write its artifacts.
    Train {
        /// Sectioned key=value config file; missing keys use the
        /// benchmark defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the run seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the method (gram|gan|mmdnet).
        #[arg(long)]
        method: Option<String>,
        /// Output directory (under GRAM_OUT_ROOT when relative and set).
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Run the stability grid (noise dim x critic hidden x method).
    Grid {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long, default_value = "grid")]
        out: PathBuf,
        /// Concurrent runs.
        #[arg(long, default_value_t = 2)]
        parallel: usize,
    },
    /// Render SVG plots for a finished run directory.
    Plot {
        #[arg(long)]
        run: PathBuf,
    },
}

fn overrides(seed: Option<u64>, method: Option<&str>) -> anyhow::Result<Overrides> {
    Ok(Overrides {
        seed,
        method: method.map(parse_method).transpose()?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> anyhow::Result<i32> {
        match &cli.command {
            Command::Train {
                config,
                seed,
                method,
                out,
            } => runner::cmd_train(config.as_deref(), &overrides(*seed, method.as_deref())?, out),
            Command::Grid {
                config,
                seed,
                method,
                out,
                parallel,
            } => runner::cmd_grid(
                config.as_deref(),
                &overrides(*seed, method.as_deref())?,
                out,
                *parallel,
            ),
            Command::Plot { run } => runner::cmd_plot(run),
        }
    };
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
