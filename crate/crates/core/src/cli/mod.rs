//! The `gridmac` command line: `simulate`, `screen`, `certify` and `report`.
//!
//! `screen` and `certify` write a JSON artifact plus a JSONL evidence file
//! holding the per-run success bitmaps, so every estimate can be recounted.

pub mod artifact;
pub mod commands;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{load_config, ExperimentConfig};
use crate::error::{Error, Result};
use crate::game::Verdict;
pub use artifact::{evidence_path, read_artifact, read_evidence, Artifact};
pub use commands::{cmd_certify, cmd_report, cmd_screen, cmd_simulate, SimulationSummary};

#[derive(Debug, Parser)]
#[command(
    name = "gridmac",
    version,
    about = "CSMA/CA simulation and equilibrium certification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the master seed from the config.
    #[arg(long, env = "GRIDMAC_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "GRIDMAC_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Runs a symmetric profile and prints per-run and aggregate metrics.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Strategy id from the strategy space.
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 1)]
        runs: u64,
        /// Writes the workload and event trace of run 0 to this file.
        #[arg(long)]
        trace_dump: Option<PathBuf>,
    },
    /// Dominance-ratio screening over the strategy space.
    Screen {
        #[command(flatten)]
        common: Common,
        /// Overrides `m_screen`.
        #[arg(long)]
        runs: Option<u64>,
        #[arg(long, default_value = "screening.json")]
        out: PathBuf,
    },
    /// Certifies one candidate as a relaxed symmetric equilibrium.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        candidate: String,
        /// Overrides `m_cert`.
        #[arg(long)]
        runs: Option<u64>,
        #[arg(long, default_value = "certification.json")]
        out: PathBuf,
    },
    /// Tabulates screening and certification artifacts as CSV, or JSON when
    /// `--out` ends in `.json`.
    Report {
        #[arg(required = true)]
        artifacts: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut config = load_config(&common.config)?;
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(workers) = common.workers {
        config.workers = workers;
    }
    Ok(config)
}

fn runs_override(runs: Option<u64>) -> Result<Option<u64>> {
    match runs {
        Some(0) => Err(Error::Argument("--runs must be >= 1".into())),
        other => Ok(other),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io(Path::new("<stdout>"), e))
}

/// Executes one command, writing human-readable output to `out`.
/// Returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Simulate {
            common,
            profile,
            runs,
            trace_dump,
        } => {
            if runs == 0 {
                return Err(Error::Argument("--runs must be >= 1".into()));
            }
            let config = load(&common)?;
            let summary = cmd_simulate(&config, &profile, runs, trace_dump.as_deref())?;
            emit(out, &summary.render())?;
            Ok(0)
        }
        Command::Screen {
            common,
            runs,
            out: path,
        } => {
            let mut config = load(&common)?;
            if let Some(m) = runs_override(runs)? {
                config.m_screen = m;
            }
            let (artifact, evidence) = cmd_screen(&config)?;
            artifact::write_json(&path, &Artifact::Screening(artifact.clone()))?;
            artifact::write_evidence(&evidence_path(&path), &evidence)?;
            emit(out, &artifact.render())?;
            emit(out, &format!("wrote {}\n", path.display()))?;
            Ok(0)
        }
        Command::Certify {
            common,
            candidate,
            runs,
            out: path,
        } => {
            let mut config = load(&common)?;
            if let Some(m) = runs_override(runs)? {
                config.m_cert = m;
            }
            let (artifact, evidence) = cmd_certify(&config, &candidate)?;
            artifact::write_json(&path, &Artifact::Certification(artifact.clone()))?;
            artifact::write_evidence(&evidence_path(&path), &evidence)?;
            emit(out, &artifact.render())?;
            emit(out, &format!("wrote {}\n", path.display()))?;
            Ok(match artifact.report.verdict {
                Verdict::Certified => 0,
                Verdict::NotCertified => 2,
            })
        }
        Command::Report {
            artifacts,
            out: path,
        } => {
            let loaded = artifacts
                .iter()
                .map(|p| read_artifact(p))
                .collect::<Result<Vec<_>>>()?;
            let rows = cmd_report(&loaded)?;
            let json = path
                .as_ref()
                .is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
            let text = if json {
                report::render_json(&rows)?
            } else {
                report::render_csv(&rows)?
            };
            match path {
                Some(p) => std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?,
                None => emit(out, &text)?,
            }
            Ok(0)
        }
    }
}
