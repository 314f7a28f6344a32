//! `graphon`: deterministic command-line harness for graphon sampling,
//! probability-matrix estimation, spectral tail certificates, subspace
//! packings, and the Monte Carlo experiment suite.
//!
//! Every run reads one optional TOML configuration document (unknown keys
//! rejected, defaults documented in `config`), writes a `manifest.json`
//! before any result file, and derives all randomness from the root seed
//! through named streams — the same configuration and seed always produce
//! identical artifact bytes, except for the manifest's timestamp line.
//!
//! On failure the process exits nonzero and prints a single machine-readable
//! JSON object to stderr: `{"error": {"message", "chain"}}`.

#![forbid(unsafe_code)]

mod commands;
mod config;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;
use manifest::Manifest;

/// Environment variable reserved for overriding the worker thread count.
/// Execution is currently sequential end to end, so any positive value is
/// accepted and only logged.
const THREADS_VAR: &str = "GRAPHON_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "graphon",
    version,
    about = "Graphon sampling, estimation, packing, and experiment harness",
    propagate_version = true
)]
struct Cli {
    /// TOML configuration document; every key is optional.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Root seed override (default: the config value, falling back to 2024).
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,
    /// Output directory for artifacts (created if absent).
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample latents, the edge-probability matrix, and one adjacency matrix.
    Sample,
    /// Estimate the edge-probability matrix from an adjacency file.
    Estimate {
        /// Adjacency matrix file (first line n, then n rows of 0/1).
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
    },
    /// Spectral tail diagnostics.
    Spectra {
        #[command(subcommand)]
        command: SpectraCommand,
    },
    /// Separated frame packings.
    Packing {
        #[command(subcommand)]
        command: PackingCommand,
    },
    /// Hypothesis-family diagnostics for the minimax lower bound.
    Fano {
        #[command(subcommand)]
        command: FanoCommand,
    },
    /// Monte Carlo experiment suite.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
}

#[derive(Debug, Subcommand)]
enum SpectraCommand {
    /// Certify eigenvalue tail decay at the configured cuts.
    Certify,
}

#[derive(Debug, Subcommand)]
enum PackingCommand {
    /// Search for a separated frame packing and write it with its
    /// certificate.
    Build,
    /// Re-validate a stored frame file against the configured separation.
    Verify {
        /// Frame file produced by `packing build`.
        #[arg(long, value_name = "FILE")]
        frames: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum FanoCommand {
    /// Measure separation and KL budgets of the packing-induced family.
    Report,
}

#[derive(Debug, Subcommand)]
enum ExperimentCommand {
    /// Estimation error versus graph size, with a log-log slope fit.
    Rate,
    /// Occupancy-event frequencies under repeated latent draws.
    Conditioning,
    /// Spectrum drift under measure-preserving relabelings.
    Invariance,
}

impl Command {
    /// Label echoed into the manifest.
    fn label(&self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Estimate { .. } => "estimate",
            Command::Spectra {
                command: SpectraCommand::Certify,
            } => "spectra certify",
            Command::Packing {
                command: PackingCommand::Build,
            } => "packing build",
            Command::Packing {
                command: PackingCommand::Verify { .. },
            } => "packing verify",
            Command::Fano {
                command: FanoCommand::Report,
            } => "fano report",
            Command::Experiment {
                command: ExperimentCommand::Rate,
            } => "experiment rate",
            Command::Experiment {
                command: ExperimentCommand::Conditioning,
            } => "experiment conditioning",
            Command::Experiment {
                command: ExperimentCommand::Invariance,
            } => "experiment invariance",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            let chain: Vec<String> = error.chain().map(ToString::to_string).collect();
            let payload = serde_json::json!({
                "error": {
                    "message": format!("{error:#}"),
                    "chain": chain,
                }
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    check_thread_override()?;
    let mut config = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    fs::create_dir_all(&cli.out)
        .with_context(|| format!("cannot create output directory {}", cli.out.display()))?;

    // The manifest goes down first, marked incomplete, so an interrupted run
    // is never mistaken for a finished one.
    let mut manifest = Manifest::start(&cli.out, cli.command.label(), &config)?;
    dispatch(&cli.command, &config, &cli.out, &mut manifest)?;
    manifest.finish(&config)
}

fn dispatch(
    command: &Command,
    config: &RunConfig,
    out_dir: &Path,
    manifest: &mut Manifest,
) -> Result<()> {
    match command {
        Command::Sample => commands::sample(config, out_dir, manifest),
        Command::Estimate { input } => commands::estimate(config, input, out_dir, manifest),
        Command::Spectra {
            command: SpectraCommand::Certify,
        } => commands::spectra_certify(config, out_dir, manifest),
        Command::Packing {
            command: PackingCommand::Build,
        } => commands::packing_build(config, out_dir, manifest),
        Command::Packing {
            command: PackingCommand::Verify { frames },
        } => commands::packing_verify(config, frames, out_dir, manifest),
        Command::Fano {
            command: FanoCommand::Report,
        } => commands::fano_report(config, out_dir, manifest),
        Command::Experiment {
            command: ExperimentCommand::Rate,
        } => commands::experiment_rate(config, out_dir, manifest),
        Command::Experiment {
            command: ExperimentCommand::Conditioning,
        } => commands::experiment_conditioning(config, out_dir, manifest),
        Command::Experiment {
            command: ExperimentCommand::Invariance,
        } => commands::experiment_invariance(config, out_dir, manifest),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(path) => {
            let document = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            RunConfig::parse(&document)
                .with_context(|| format!("invalid config {}", path.display()))
        }
        None => Ok(RunConfig::default()),
    }
}

fn check_thread_override() -> Result<()> {
    match std::env::var(THREADS_VAR) {
        Ok(raw) => {
            let threads: usize = raw.parse().ok().filter(|&n| n >= 1).with_context(|| {
                format!("{THREADS_VAR} must be a positive integer, got {raw:?}")
            })?;
            if threads > 1 {
                println!("{THREADS_VAR}={threads} requested; execution is sequential");
            }
            Ok(())
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(error) => bail!("{THREADS_VAR} is not valid unicode: {error}"),
    }
}
