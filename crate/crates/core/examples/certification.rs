//! Certifies a flagship candidate as a relaxed symmetric equilibrium.
//! Usage: `certification [CANDIDATE] [RUNS]`, defaults D and 2000.

use gridmac::cli::cmd_certify;
use gridmac::config::load_config;
use gridmac::game::Verdict;

fn main() -> gridmac::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/flagship.toml");
    let mut config = load_config(path)?;
    let mut args = std::env::args().skip(1);
    let candidate = args.next().unwrap_or_else(|| "D".to_string());
    config.m_cert = args.next().and_then(|a| a.parse().ok()).unwrap_or(2000);
    let (artifact, _) = cmd_certify(&config, &candidate)?;
    print!("{}", artifact.render());
    if artifact.report.verdict == Verdict::NotCertified {
        println!("{candidate} misses the target {}", config.delta_target);
    }
    Ok(())
}
