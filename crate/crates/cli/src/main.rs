//! `twistlab run <config> [--out DIR] [--seed N] [--threads N]` and
//! `twistlab validate <config>`.
//!
//! Exit status: 0 on success, 1 for an invalid invocation or configuration,
//! 2 when a pipeline or the export fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use twistlab::config::ExperimentConfig;
use twistlab::experiment::{export_bundle, run_experiment};

#[derive(Parser)]
#[command(name = "twistlab", version, about = "Twisted waveguide experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and export its bundle.
    Run {
        config: PathBuf,
        /// Output directory for the results bundle.
        #[arg(long, env = "TWISTLAB_OUT", default_value = "twistlab-out")]
        out: PathBuf,
        /// Overrides `inverse.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and check a config file without running it.
    Validate { config: PathBuf },
}

fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("invalid configuration {}", path.display()))
}

fn run(cfg: ExperimentConfig, out: &Path, threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
    }
    let bundle = run_experiment(&cfg)?;
    let manifest = export_bundle(&bundle, out).with_context(|| format!("writing bundle to {}", out.display()))?;
    println!("experiment {} finished, {} files in {}", cfg.experiment.name(), manifest.len(), out.display());
    for (k, v) in &bundle.summary {
        println!("  {k} = {v:.6e}");
    }
    Ok(())
}

fn report(e: &anyhow::Error) {
    eprintln!("error: {e:#}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("{}: valid {} configuration", config.display(), cfg.experiment.name());
                ExitCode::SUCCESS
            }
            Err(e) => {
                report(&e);
                ExitCode::from(1)
            }
        },
        Command::Run { config, out, seed, threads } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => {
                    report(&e);
                    return ExitCode::from(1);
                }
            };
            if let Some(s) = seed {
                cfg.inverse.seed = s;
            }
            match run(cfg, &out, threads) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    report(&e);
                    ExitCode::from(2)
                }
            }
        }
    }
}
