//! Dominance-ratio screening of the six flagship parameter sets at a
//! reduced run count. Pass a run count as the first argument to override.

use gridmac::cli::cmd_screen;
use gridmac::config::load_config;

fn main() -> gridmac::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/flagship.toml");
    let mut config = load_config(path)?;
    config.m_screen = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(500);
    let (artifact, evidence) = cmd_screen(&config)?;
    print!("{}", artifact.render());
    println!("{} evidence records", evidence.len());
    Ok(())
}
