//! Monte Carlo utility of a unilateral deviation: node 0 plays E while the
//! other 19 nodes play C, compared with C in self-play.

use gridmac::automata::{EnergyModel, ProtocolConfig};
use gridmac::cbtl::builtin_phi;
use gridmac::stats::{estimate_utility, Estimator, SeedPlan};
use gridmac::workload::Scenario;

fn main() -> gridmac::Result<()> {
    let scenario = Scenario::flagship();
    let energy = EnergyModel::default();
    let phi = builtin_phi(&scenario);
    let c = ProtocolConfig::new(3, 5, 3, 160.0, 0.10);
    let e = ProtocolConfig::new(2, 3, 1, 96.0, 0.07);
    let estimator = Estimator::new(SeedPlan::new(42), 0)?;
    println!(
        "{} workers, seed plan {}",
        estimator.workers(),
        estimator.seeds().id()
    );

    for (label, deviant, pair) in [("C vs C", ("C", &c), 0), ("E vs C", ("E", &e), 1)] {
        let (u, evidence) = estimate_utility(
            &estimator,
            &scenario,
            &energy,
            deviant,
            ("C", &c),
            &phi,
            2000,
            pair,
        )?;
        println!(
            "{label}: U = {:.3} ± {:.3}  95% CI [{:.3}, {:.3}]  ({} of {} runs; bitmap {} hex chars)",
            u.p_hat,
            u.se,
            u.ci_low,
            u.ci_high,
            u.successes,
            u.trials,
            evidence.bitmap.len()
        );
        assert_eq!(evidence.recount()?, u.successes);
    }
    Ok(())
}
