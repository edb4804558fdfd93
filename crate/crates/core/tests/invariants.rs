//! Property tests over whole episodes: channel exclusivity, frame
//! bookkeeping, energy accounting and seed-plan reproducibility.

use gridmac::automata::{draw_backoff, EnergyModel, EventResponseMode, Location, ProtocolConfig};
use gridmac::cbtl::builtin_phi;
use gridmac::medium::{run_episode, RunOutcome, TxOutcome};
use gridmac::stats::{estimate_utility, Estimator, SeedPlan};
use gridmac::workload::{generate_trace, Scenario};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config() -> impl Strategy<Value = ProtocolConfig> {
    (
        0u8..=5,
        0u8..=3,
        0u32..=5,
        prop::sample::select(vec![96.0, 128.0, 160.0, 192.0]),
        0.02f64..=1.0,
        any::<bool>(),
    )
        .prop_map(|(be_min, spread, n_retx, cca, duty, urgent)| {
            let mode = if urgent {
                EventResponseMode::UrgentPreempt
            } else {
                EventResponseMode::Normal
            };
            ProtocolConfig::new(be_min, (be_min + spread).max(1), n_retx, cca, duty).with_mode(mode)
        })
}

fn scenario() -> impl Strategy<Value = Scenario> {
    (
        1usize..=20,
        0.0f64..400.0,
        0.0f64..60.0,
        0.0f64..=1.0,
        0.0f64..0.3,
    )
        .prop_map(|(n, alarms, blackouts, surge, loss)| {
            let mut s = Scenario::flagship();
            s.n_nodes = n;
            s.alarm_rate_per_hour = alarms;
            s.blackout.rate_per_hour = blackouts;
            s.surge.probability = surge;
            s.channel_loss = loss;
            s
        })
}

fn episode(s: &Scenario, configs: &[ProtocolConfig], seed: u64) -> RunOutcome {
    let assignment: Vec<ProtocolConfig> =
        (0..s.n_nodes).map(|i| configs[i % configs.len()]).collect();
    let trace = generate_trace(s, seed).unwrap();
    run_episode(
        s,
        &EnergyModel::default(),
        &assignment,
        &trace,
        seed.wrapping_add(1),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn overlapping_transmissions_collide(
        s in scenario(),
        configs in prop::collection::vec(config(), 1..4),
        seed in any::<u64>(),
    ) {
        let run = episode(&s, &configs, seed);
        let mut tx = run.transmissions.clone();
        tx.sort_by(|a, b| a.start.total_cmp(&b.start));
        for (i, a) in tx.iter().enumerate() {
            for b in tx[i + 1..].iter().take_while(|b| b.start < a.end) {
                prop_assert_eq!(a.outcome, TxOutcome::Collided, "{:?} overlaps {:?}", a, b);
                prop_assert_eq!(b.outcome, TxOutcome::Collided, "{:?} overlaps {:?}", b, a);
            }
        }
        for t in &tx {
            prop_assert!((t.end - t.start - s.mac.airtime_us * 1e-6).abs() < 1e-9);
        }
    }

    #[test]
    fn frame_bookkeeping_is_consistent(
        s in scenario(),
        configs in prop::collection::vec(config(), 1..4),
        seed in any::<u64>(),
    ) {
        let run = episode(&s, &configs, seed);
        let min_latency = (s.mac.airtime_us + s.mac.ack_turnaround_us) * 1e-6;
        for (i, node) in run.per_node.iter().enumerate() {
            let cfg = configs[i % configs.len()];
            for f in &node.frames {
                prop_assert!(f.attempts <= cfg.n_retx + 1);
                prop_assert!(!(f.dropped && f.delivered.is_some()));
                if let Some(l) = f.latency {
                    prop_assert!(l >= min_latency - 1e-9, "latency {} below one exchange", l);
                    prop_assert!(f.delivered.unwrap() <= run.horizon);
                }
            }
            prop_assert!(node.cycle_start_energy_mj.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!((node.cycle_start_energy_mj[run.cycles] - node.energy_mj).abs() <= 1e-9 * node.energy_mj.max(1.0));
            prop_assert!((0.0..=1.0).contains(&node.awake_fraction_during_blackout_recovery));
            let horizon_ns = (run.horizon * 1e9).round() as u64;
            prop_assert_eq!(node.state_time_ns.iter().sum::<u64>(), horizon_ns);
            let energy: f64 = Location::ALL
                .iter()
                .map(|l| l.power(&EnergyModel::default()) * node.state_time_ns[l.index()] as f64 * 1e-9)
                .sum();
            prop_assert!((energy - node.energy_mj).abs() <= 1e-9 * energy);
        }
        for ev in &run.network.alarm_events {
            prop_assert_eq!(ev.responder_latencies.len(), s.n_nodes);
            prop_assert!(ev.responders_within(s.t_alarm) <= s.n_nodes);
        }
    }

    #[test]
    fn episodes_are_reproducible(s in scenario(), cfg in config(), seed in any::<u64>()) {
        prop_assert_eq!(episode(&s, &[cfg], seed), episode(&s, &[cfg], seed));
    }

    #[test]
    fn backoff_stays_in_window(be in 0u8..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..64 {
            let slots = draw_backoff(be, &mut rng).unwrap();
            prop_assert!(u64::from(slots) < 1u64 << be);
        }
    }
}

#[test]
fn backoff_exponent_above_limit_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(draw_backoff(9, &mut rng).is_err());
}

#[test]
fn utility_is_independent_of_worker_count() {
    let s = Scenario::flagship();
    let phi = builtin_phi(&s);
    let c = ProtocolConfig::new(3, 5, 3, 160.0, 0.10);
    let e = ProtocolConfig::new(2, 3, 1, 96.0, 0.07);
    let results: Vec<_> = [1, 4, 16]
        .into_iter()
        .map(|w| {
            let est = Estimator::new(SeedPlan::new(99), w).unwrap();
            estimate_utility(
                &est,
                &s,
                &EnergyModel::default(),
                ("E", &e),
                ("C", &c),
                &phi,
                64,
                3,
            )
            .unwrap()
        })
        .collect();
    assert_eq!(results[0], results[1]);
    assert_eq!(results[0], results[2]);
    let (u, evidence) = &results[0];
    assert!((0.0..=1.0).contains(&u.p_hat));
    assert_eq!(evidence.recount().unwrap(), u.successes);
}
