//! Screen, certify the selected candidate, and print the parameter table
//! as CSV. Artifacts are written to a temporary directory.

use gridmac::cli::artifact::{read_artifact, write_json};
use gridmac::cli::report::{build_rows, render_csv};
use gridmac::cli::{cmd_certify, cmd_screen, Artifact};
use gridmac::config::load_config;

fn main() -> gridmac::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/flagship.toml");
    let mut config = load_config(path)?;
    config.m_screen = 300;
    config.m_cert = 1000;

    let (screening, _) = cmd_screen(&config)?;
    let candidate = screening.result.selected.clone();
    let (certification, _) = cmd_certify(&config, &candidate)?;

    let dir = std::env::temp_dir().join("gridmac-table-report");
    std::fs::create_dir_all(&dir).map_err(|e| gridmac::Error::Artifact(e.to_string()))?;
    let s_path = dir.join("screening.json");
    let c_path = dir.join("certification.json");
    write_json(&s_path, &Artifact::Screening(screening))?;
    write_json(&c_path, &Artifact::Certification(certification))?;

    let artifacts = [read_artifact(&s_path)?, read_artifact(&c_path)?];
    print!("{}", render_csv(&build_rows(&artifacts)?)?);
    Ok(())
}
