//! Parsing, printing and evaluating predicates over simulated episodes.

use gridmac::automata::{EnergyModel, ProtocolConfig};
use gridmac::cbtl::{
    builtin_phi, builtin_psi, evaluate_network, evaluate_node, node_clauses, parse,
};
use gridmac::medium::run_episode;
use gridmac::workload::{generate_trace, Scenario};

fn main() -> gridmac::Result<()> {
    let scenario = Scenario::flagship();
    let phi = builtin_phi(&scenario);
    let psi = builtin_psi(&scenario);
    println!("phi = {phi}");
    println!("psi = {psi}");

    let custom = parse("within [energy <= 40 mJ] (status_latency <= 2 s and success_count >= 2) or not awake_fraction < 0.5")?;
    println!("custom = {custom}");

    match parse("alarm_latency <= 3") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }

    let cfg = ProtocolConfig::new(3, 5, 3, 160.0, 0.10);
    let assignment = vec![cfg; scenario.n_nodes];
    for seed in 0..5 {
        let trace = generate_trace(&scenario, seed)?;
        let run = run_episode(
            &scenario,
            &EnergyModel::default(),
            &assignment,
            &trace,
            seed + 100,
        )?;
        println!(
            "episode {seed}: phi(node 0) {}  clauses {:?}  custom {}  psi {}",
            evaluate_node(&phi, &run, 0)?,
            node_clauses(&phi, &run, 0)?,
            evaluate_node(&custom, &run, 0)?,
            evaluate_network(&psi, &run)?
        );
    }
    Ok(())
}
