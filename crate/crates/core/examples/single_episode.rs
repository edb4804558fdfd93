//! One flagship episode with every node on parameter set B, plus the first
//! lines of the event trace.

use gridmac::automata::{EnergyModel, ProtocolConfig};
use gridmac::medium::{run_episode_traced, TxOutcome};
use gridmac::workload::{generate_trace, Scenario};

fn main() -> gridmac::Result<()> {
    let scenario = Scenario::flagship();
    let energy = EnergyModel::default();
    let b = ProtocolConfig::new(2, 5, 2, 128.0, 0.09);
    let assignment = vec![b; scenario.n_nodes];

    let trace = generate_trace(&scenario, 1)?;
    println!(
        "workload: {} alarms, {} blackout intervals, surge cycles {:?}",
        trace.alarm_times.len(),
        trace.blackout_intervals.len(),
        trace.surge_cycles
    );

    let mut records = Vec::new();
    let run = run_episode_traced(&scenario, &energy, &assignment, &trace, 2, &mut records)?;
    let collided = run
        .transmissions
        .iter()
        .filter(|t| t.outcome == TxOutcome::Collided)
        .count();
    println!(
        "{} transmissions, {collided} collided",
        run.transmissions.len()
    );

    for (i, node) in run.per_node.iter().enumerate().take(5) {
        let (ok, total) = node.status_delivery_counts(run.horizon);
        println!(
            "node {i:>2}: {ok}/{total} status frames on time, {:.2} mJ/cycle, {} retransmissions",
            node.mean_cycle_energy_mj(),
            node.retransmissions
        );
    }
    for ev in &run.network.alarm_events {
        println!(
            "alarm {} at {:.3} s: {} responders within {} s",
            ev.alarm_id,
            ev.time,
            ev.responders_within(scenario.t_alarm),
            scenario.t_alarm
        );
    }
    println!("first trace records:");
    for r in records.iter().take(12) {
        println!("  {r}");
    }
    Ok(())
}
