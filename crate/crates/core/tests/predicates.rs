//! Semantic laws of the predicate evaluator over simulated episodes.

use gridmac::automata::{EnergyModel, ProtocolConfig};
use gridmac::cbtl::{
    builtin_phi, builtin_psi, evaluate_network, evaluate_node, parse, Comparator, Metric,
    PredicateAst,
};
use gridmac::medium::{run_episode, RunOutcome};
use gridmac::workload::{generate_trace, Scenario};
use proptest::prelude::*;
use std::sync::OnceLock;

/// A small pool of varied episodes, simulated once.
fn runs() -> &'static [RunOutcome] {
    static RUNS: OnceLock<Vec<RunOutcome>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut s = Scenario::flagship();
        s.alarm_rate_per_hour = 200.0;
        s.blackout.rate_per_hour = 30.0;
        let configs = [
            ProtocolConfig::new(2, 3, 1, 96.0, 0.07),
            ProtocolConfig::new(2, 5, 2, 128.0, 0.09),
            ProtocolConfig::new(4, 6, 4, 192.0, 0.12),
        ];
        (0..24u64)
            .map(|seed| {
                let cfg = configs[seed as usize % 3];
                let trace = generate_trace(&s, seed).unwrap();
                run_episode(
                    &s,
                    &EnergyModel::default(),
                    &vec![cfg; s.n_nodes],
                    &trace,
                    seed + 7,
                )
                .unwrap()
            })
            .collect()
    })
}

fn node_metric() -> impl Strategy<Value = Metric> {
    prop::sample::select(
        Metric::ALL
            .iter()
            .copied()
            .filter(|m| *m != Metric::RespondersCount)
            .collect::<Vec<_>>(),
    )
}

fn threshold(m: Metric) -> impl Strategy<Value = f64> {
    let hi = match m {
        Metric::StatusLatency | Metric::AlarmLatency => 5.0,
        Metric::Energy | Metric::EnergyPerCycle => 40.0,
        Metric::SuccessCount | Metric::StatusDeliveredWithinCycle => 8.0,
        _ => 1.0,
    };
    (0u32..=200).prop_map(move |i| hi * f64::from(i) / 200.0)
}

fn node_atom() -> impl Strategy<Value = PredicateAst> {
    let cmp = prop::sample::select(vec![
        Comparator::Le,
        Comparator::Lt,
        Comparator::Ge,
        Comparator::Gt,
    ]);
    (node_metric(), cmp)
        .prop_flat_map(|(m, c)| threshold(m).prop_map(move |t| PredicateAst::atom(m, c, t)))
}

fn node_formula() -> impl Strategy<Value = PredicateAst> {
    node_atom().prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(PredicateAst::And),
            prop::collection::vec(inner.clone(), 2..4).prop_map(PredicateAst::Or),
            inner.clone().prop_map(PredicateAst::negation),
            (0u32..60, inner).prop_map(|(b, body)| PredicateAst::within(
                Metric::Energy,
                f64::from(b),
                body
            )),
        ]
    })
}

fn eval(ast: &PredicateAst, run: &RunOutcome) -> bool {
    evaluate_node(ast, run, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn atom_and_negation_never_both_hold(a in node_atom()) {
        let negated = PredicateAst::negation(a.clone());
        for run in runs() {
            prop_assert!(!(eval(&a, run) && eval(&negated, run)), "{} and its negation both hold", a);
        }
    }

    #[test]
    fn conjunction_within_a_cycle_matches_de_morgan(a in node_formula(), b in node_formula()) {
        let and = PredicateAst::And(vec![a.clone(), b.clone()]);
        let dual = PredicateAst::negation(PredicateAst::Or(vec![PredicateAst::negation(a.clone()), PredicateAst::negation(b.clone())]));
        for run in runs() {
            prop_assert_eq!(eval(&and, run), eval(&dual, run), "{} vs {}", and, dual);
            prop_assert_eq!(eval(&and, run), eval(&a, run) && eval(&b, run));
        }
    }

    #[test]
    fn upper_bounds_are_monotone(m in node_metric(), t in 0u32..100, bump in 1u32..100) {
        let loose = f64::from(t + bump) / 10.0;
        let tight = PredicateAst::atom(m, Comparator::Le, f64::from(t) / 10.0);
        let relaxed = PredicateAst::atom(m, Comparator::Le, loose);
        for run in runs() {
            prop_assert!(!eval(&tight, run) || eval(&relaxed, run), "{} holds but {} does not", tight, relaxed);
        }
    }

    #[test]
    fn energy_bound_is_monotone(body in node_formula(), b in 0u32..60, bump in 1u32..60) {
        let tight = PredicateAst::within(Metric::Energy, f64::from(b), body.clone());
        let relaxed = PredicateAst::within(Metric::Energy, f64::from(b + bump), body);
        for run in runs() {
            prop_assert!(!eval(&tight, run) || eval(&relaxed, run));
        }
    }

    #[test]
    fn responder_threshold_is_monotone(k in 0u32..20, d in 1u32..60) {
        let strict = parse(&format!("always (grid_event -> eventually <= {} s responders_count >= {})", f64::from(d) / 10.0, k + 1)).unwrap();
        let lax = parse(&format!("always (grid_event -> eventually <= {} s responders_count >= {k})", f64::from(d) / 10.0)).unwrap();
        for run in runs() {
            prop_assert!(!evaluate_network(&strict, run).unwrap() || evaluate_network(&lax, run).unwrap());
        }
    }
}

#[test]
fn builtin_objectives_evaluate_on_every_run() {
    let s = Scenario::flagship();
    for run in runs() {
        evaluate_node(&builtin_phi(&s), run, 0).unwrap();
        evaluate_network(&builtin_psi(&s), run).unwrap();
    }
}

#[test]
fn scope_errors_are_reported() {
    let run = &runs()[0];
    let psi = builtin_psi(&Scenario::flagship());
    assert!(matches!(
        evaluate_node(&psi, run, 0),
        Err(gridmac::Error::Eval(_))
    ));
    let phi = builtin_phi(&Scenario::flagship());
    assert!(matches!(
        evaluate_network(&phi, run),
        Err(gridmac::Error::Eval(_))
    ));
    assert!(matches!(
        evaluate_node(&phi, run, 99),
        Err(gridmac::Error::Eval(_))
    ));
}
