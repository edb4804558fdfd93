//! Directional sensitivity of the simulator: retry limit, backoff window
//! under surge traffic, and duty cycle. Each line reports the difference in
//! units of its pooled standard error.

use gridmac::automata::{EnergyModel, EventResponseMode, ProtocolConfig};
use gridmac::stats::{mean_se, EpisodeMetrics, Estimator, SeedPlan};
use gridmac::workload::Scenario;

const RUNS: u64 = 1000;

fn sample(
    est: &Estimator,
    s: &Scenario,
    cfg: &ProtocolConfig,
    pair: u64,
) -> gridmac::Result<Vec<EpisodeMetrics>> {
    est.run_pair(s, &EnergyModel::default(), cfg, cfg, RUNS, pair, |r| {
        Ok(EpisodeMetrics::from_run(r))
    })
}

fn compare(
    label: &str,
    a: &[EpisodeMetrics],
    b: &[EpisodeMetrics],
    f: impl Fn(&EpisodeMetrics) -> Option<f64>,
) {
    let (ma, sa) = mean_se(&a.iter().filter_map(&f).collect::<Vec<_>>()).unwrap();
    let (mb, sb) = mean_se(&b.iter().filter_map(&f).collect::<Vec<_>>()).unwrap();
    let z = (mb - ma) / (sa * sa + sb * sb).sqrt();
    println!("  {label:<16} {ma:>9.4} -> {mb:>9.4}   {z:+7.1} SE");
}

fn main() -> gridmac::Result<()> {
    let est = Estimator::new(SeedPlan::new(3), 0)?;
    let delivery = |m: &EpisodeMetrics| Some(m.delivery_ratio);
    let energy = |m: &EpisodeMetrics| Some(m.energy_per_cycle_mj);

    let s = Scenario::flagship();
    let (a, b) = (
        sample(&est, &s, &ProtocolConfig::new(2, 4, 1, 128.0, 0.08), 0)?,
        sample(&est, &s, &ProtocolConfig::new(2, 4, 4, 128.0, 0.08), 1)?,
    );
    println!("n_retx 1 -> 4");
    compare("delivery", &a, &b, delivery);
    compare("energy mJ/cycle", &a, &b, energy);

    let mut surge = Scenario::flagship();
    surge.surge.probability = 1.0;
    surge.surge.extra_frames = 4;
    let (a, b) = (
        sample(&est, &surge, &ProtocolConfig::new(2, 3, 2, 128.0, 0.08), 2)?,
        sample(&est, &surge, &ProtocolConfig::new(4, 6, 2, 128.0, 0.08), 3)?,
    );
    println!("BE [2,3] -> [4,6] under surge");
    compare("delivery", &a, &b, delivery);

    let mut alarms = Scenario::flagship();
    alarms.alarm_rate_per_hour = 240.0;
    let normal =
        |duty| ProtocolConfig::new(2, 4, 2, 128.0, duty).with_mode(EventResponseMode::Normal);
    let (a, b) = (
        sample(&est, &alarms, &normal(0.10), 4)?,
        sample(&est, &alarms, &normal(0.05), 5)?,
    );
    println!("duty 10% -> 5%");
    compare("energy mJ/cycle", &a, &b, energy);
    compare("alarm latency s", &a, &b, |m| m.alarm_latency_mean);
    Ok(())
}
