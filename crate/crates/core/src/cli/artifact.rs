use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::game::{CertificationReport, MetricSummary, Objective, ScreeningResult, StrategyEntry};
use crate::stats::{PairEvidence, UtilityEstimate};
use crate::workload::Scenario;

/// SHA-256 over everything that determines episode semantics: scenario,
/// energy model, strategy space and the two predicates.
pub fn scenario_fingerprint(config: &ExperimentConfig, objective: &Objective) -> Result<String> {
    let canonical = serde_json::to_string(&(
        &config.scenario,
        &config.energy_model,
        &config.strategy_space,
        objective.phi.to_string(),
        objective.psi.to_string(),
    ))
    .map_err(|e| Error::Internal(format!("fingerprint serialization: {e}")))?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfPlayRow {
    pub id: String,
    pub utility: UtilityEstimate,
    pub metrics: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningArtifact {
    pub fingerprint: String,
    pub master_seed: u64,
    pub scenario: Scenario,
    pub strategy_space: Vec<StrategyEntry>,
    pub m_base: u64,
    pub m_step: u64,
    pub result: ScreeningResult,
    /// Config with the best self-play utility.
    pub symmetric_optimum: String,
    pub self_play: Vec<SelfPlayRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationArtifact {
    pub fingerprint: String,
    pub master_seed: u64,
    pub scenario: Scenario,
    pub strategy_space: Vec<StrategyEntry>,
    pub report: CertificationReport,
    pub self_play: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Artifact {
    Screening(ScreeningArtifact),
    Certification(CertificationArtifact),
}

impl Artifact {
    pub fn fingerprint(&self) -> &str {
        match self {
            Artifact::Screening(a) => &a.fingerprint,
            Artifact::Certification(a) => &a.fingerprint,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("serializing artifact: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_artifact(path: &Path) -> Result<Artifact> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))
}

/// One JSON object per line.
pub fn write_evidence(path: &Path, evidence: &[PairEvidence]) -> Result<()> {
    let mut buf = Vec::new();
    for ev in evidence {
        serde_json::to_writer(&mut buf, ev)
            .map_err(|e| Error::Internal(format!("serializing evidence: {e}")))?;
        buf.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_evidence(path: &Path) -> Result<Vec<PairEvidence>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::Artifact(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// `screening.json` -> `screening.evidence.jsonl`.
pub fn evidence_path(artifact: &Path) -> std::path::PathBuf {
    artifact.with_extension("evidence.jsonl")
}
