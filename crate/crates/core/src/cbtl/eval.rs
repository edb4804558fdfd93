//! Evaluation of predicates over episode outcomes.
//!
//! Node formulas are checked once per reporting cycle `[c * t_rep, (c + 1) * t_rep)`
//! and a run satisfies the formula iff every cycle does. Inside
//! `within [energy <= B] body` the body is evaluated at each delivery
//! (the witness) completed in the cycle, with `energy` meaning the energy
//! spent since the cycle began.

use super::ast::{Atom, Metric, PredicateAst, Scope};
use crate::automata::FrameKind;
use crate::error::{Error, Result};
use crate::medium::{AlarmEvent, FrameOutcome, NodeOutcome, RunOutcome};

struct Cycle<'a> {
    node: &'a NodeOutcome,
    index: usize,
    start: f64,
    end: f64,
    horizon: f64,
}

impl Cycle<'_> {
    fn created_in(&self, f: &FrameOutcome) -> bool {
        f.created >= self.start && f.created < self.end
    }

    fn delivered_in(&self, f: &FrameOutcome) -> bool {
        f.delivered.is_some_and(|d| d >= self.start && d < self.end)
    }

    fn start_energy(&self) -> f64 {
        self.node.cycle_start_energy_mj[self.index]
    }

    fn energy(&self) -> f64 {
        self.node.cycle_energy_mj(self.index)
    }

    /// Deliveries completed in the cycle, in completion order.
    fn witnesses(&self) -> Vec<&FrameOutcome> {
        let mut w: Vec<&FrameOutcome> = self
            .node
            .frames
            .iter()
            .filter(|f| self.delivered_in(f))
            .collect();
        w.sort_by(|a, b| {
            a.delivered
                .partial_cmp(&b.delivered)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        w
    }

    fn status_within_cycle(&self, until: f64) -> usize {
        self.node
            .frames
            .iter()
            .filter(|f| f.kind == FrameKind::Status && self.created_in(f))
            .filter(|f| f.delivered.is_some_and(|d| d < self.end && d <= until))
            .count()
    }
}

struct Witness<'a> {
    frame: &'a FrameOutcome,
    energy_so_far: f64,
    /// Deliveries in the cycle up to and including this one.
    successes: usize,
}

fn atom_at_cycle(a: &Atom, cy: &Cycle<'_>) -> bool {
    let cmp = |v: f64| a.comparator.holds(v, a.threshold);
    match a.metric {
        Metric::StatusLatency => cy
            .node
            .frames
            .iter()
            .filter(|f| f.kind == FrameKind::Status && cy.created_in(f))
            .any(|f| f.latency.is_some_and(cmp)),
        Metric::AlarmLatency => cy
            .node
            .frames
            .iter()
            .filter(|f| f.kind == FrameKind::Alarm && cy.created_in(f))
            // fate unknown: the deadline lies beyond the observed horizon
            .filter(|f| f.delivered.is_some() || f.deadline <= cy.horizon)
            .all(|f| cmp(f.latency.unwrap_or(f64::INFINITY))),
        Metric::Energy | Metric::EnergyPerCycle => cmp(cy.energy()),
        Metric::SuccessCount => {
            cmp(cy.node.frames.iter().filter(|f| cy.delivered_in(f)).count() as f64)
        }
        Metric::StatusDeliveredWithinCycle => cmp(cy.status_within_cycle(f64::INFINITY) as f64),
        Metric::AwakeFraction => cmp(cy.node.awake_fraction_during_blackout_recovery),
        Metric::RespondersCount => unreachable!("scope checked before evaluation"),
    }
}

fn at_cycle(ast: &PredicateAst, cy: &Cycle<'_>) -> bool {
    match ast {
        PredicateAst::Atom(a) => atom_at_cycle(a, cy),
        PredicateAst::And(items) => items.iter().all(|i| at_cycle(i, cy)),
        PredicateAst::Or(items) => items.iter().any(|i| at_cycle(i, cy)),
        PredicateAst::Not(inner) => !at_cycle(inner, cy),
        PredicateAst::CostBoundedEventually { bound, body, .. } => {
            let start = cy.start_energy();
            cy.witnesses().into_iter().enumerate().any(|(i, frame)| {
                let w = Witness {
                    frame,
                    energy_so_far: frame.energy_at_delivery_mj.unwrap_or(f64::INFINITY) - start,
                    successes: i + 1,
                };
                w.energy_so_far <= *bound && at_witness(body, cy, &w)
            })
        }
        PredicateAst::AlwaysImpliesWithin { .. } => unreachable!("scope checked before evaluation"),
    }
}

fn at_witness(ast: &PredicateAst, cy: &Cycle<'_>, w: &Witness<'_>) -> bool {
    match ast {
        PredicateAst::Atom(a) => {
            let cmp = |v: f64| a.comparator.holds(v, a.threshold);
            let latency_of =
                |kind: FrameKind| w.frame.kind == kind && w.frame.latency.is_some_and(cmp);
            match a.metric {
                Metric::StatusLatency => latency_of(FrameKind::Status),
                Metric::AlarmLatency => latency_of(FrameKind::Alarm),
                Metric::Energy => cmp(w.energy_so_far),
                Metric::SuccessCount => cmp(w.successes as f64),
                Metric::StatusDeliveredWithinCycle => {
                    cmp(cy.status_within_cycle(w.frame.delivered.unwrap_or(f64::INFINITY)) as f64)
                }
                _ => atom_at_cycle(a, cy),
            }
        }
        PredicateAst::And(items) => items.iter().all(|i| at_witness(i, cy, w)),
        PredicateAst::Or(items) => items.iter().any(|i| at_witness(i, cy, w)),
        PredicateAst::Not(inner) => !at_witness(inner, cy, w),
        temporal => at_cycle(temporal, cy),
    }
}

/// Rejects formulas that cannot be evaluated at `scope`.
pub fn check_scope(ast: &PredicateAst, scope: Scope) -> Result<()> {
    match scope {
        Scope::Node => check_node_scope(ast),
        Scope::Network => {
            if let Some(m) = ast.metrics().into_iter().find(|m| m.scope() == Scope::Node) {
                return Err(Error::Eval(format!(
                    "metric `{}` is node-scope and needs a node binding",
                    m.name()
                )));
            }
            Ok(())
        }
    }
}

fn check_node_scope(ast: &PredicateAst) -> Result<()> {
    if let Some(m) = ast
        .metrics()
        .into_iter()
        .find(|m| m.scope() == Scope::Network)
    {
        return Err(Error::Eval(format!(
            "metric `{}` is network-scope and cannot be evaluated for a single node",
            m.name()
        )));
    }
    if contains_always(ast) {
        return Err(Error::Eval(
            "`always (grid_event -> ...)` is a network-scope operator".into(),
        ));
    }
    Ok(())
}

fn contains_always(ast: &PredicateAst) -> bool {
    match ast {
        PredicateAst::Atom(_) => false,
        PredicateAst::And(items) | PredicateAst::Or(items) => items.iter().any(contains_always),
        PredicateAst::Not(inner) => contains_always(inner),
        PredicateAst::CostBoundedEventually { body, .. } => contains_always(body),
        PredicateAst::AlwaysImpliesWithin { .. } => true,
    }
}

/// True iff `node_id` satisfies the formula in every reporting cycle.
pub fn evaluate_node(ast: &PredicateAst, run: &RunOutcome, node_id: usize) -> Result<bool> {
    check_node_scope(ast)?;
    let node = run.per_node.get(node_id).ok_or_else(|| {
        Error::Eval(format!(
            "node {node_id} out of range ({} nodes)",
            run.per_node.len()
        ))
    })?;
    if node.cycle_start_energy_mj.len() != run.cycles + 1 {
        return Err(Error::Eval(format!(
            "node {node_id} carries {} cycle boundaries for {} cycles",
            node.cycle_start_energy_mj.len(),
            run.cycles
        )));
    }
    Ok((0..run.cycles).all(|c| {
        let cy = Cycle {
            node,
            index: c,
            start: c as f64 * run.cycle_len,
            end: (c + 1) as f64 * run.cycle_len,
            horizon: run.horizon,
        };
        at_cycle(ast, &cy)
    }))
}

fn at_event(ast: &PredicateAst, event: &AlarmEvent, deadline: f64) -> bool {
    match ast {
        PredicateAst::Atom(a) => a
            .comparator
            .holds(event.responders_within(deadline) as f64, a.threshold),
        PredicateAst::And(items) => items.iter().all(|i| at_event(i, event, deadline)),
        PredicateAst::Or(items) => items.iter().any(|i| at_event(i, event, deadline)),
        PredicateAst::Not(inner) => !at_event(inner, event, deadline),
        _ => unreachable!("scope checked before evaluation"),
    }
}

fn network(ast: &PredicateAst, run: &RunOutcome) -> Result<bool> {
    match ast {
        PredicateAst::And(items) => {
            for i in items {
                if !network(i, run)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        PredicateAst::Or(items) => {
            let mut any = false;
            for i in items {
                any |= network(i, run)?;
            }
            Ok(any)
        }
        PredicateAst::Not(inner) => Ok(!network(inner, run)?),
        PredicateAst::AlwaysImpliesWithin { deadline, body, .. } => {
            if body.is_temporal() || contains_temporal(body) {
                return Err(Error::Eval(
                    "temporal operators cannot nest inside `always`".into(),
                ));
            }
            Ok(run.network.alarm_events.iter().all(|ev| {
                let holds = at_event(body, ev, *deadline);
                // censored: the response window extends past the horizon
                holds || ev.time + deadline > run.horizon
            }))
        }
        PredicateAst::Atom(a) => Err(Error::Eval(format!(
            "metric `{}` needs an enclosing `always (grid_event -> ...)`",
            a.metric.name()
        ))),
        PredicateAst::CostBoundedEventually { .. } => Err(Error::Eval(
            "`within [...]` is a node-scope operator".into(),
        )),
    }
}

fn contains_temporal(ast: &PredicateAst) -> bool {
    match ast {
        PredicateAst::Atom(_) => false,
        PredicateAst::And(items) | PredicateAst::Or(items) => items.iter().any(contains_temporal),
        PredicateAst::Not(inner) => contains_temporal(inner),
        _ => true,
    }
}

/// True iff the network formula holds over every alarm event of the run.
pub fn evaluate_network(ast: &PredicateAst, run: &RunOutcome) -> Result<bool> {
    check_scope(ast, Scope::Network)?;
    network(ast, run)
}

/// Per top-level clause satisfaction for one node.
pub fn node_clauses(ast: &PredicateAst, run: &RunOutcome, node_id: usize) -> Result<Vec<bool>> {
    ast.clauses()
        .into_iter()
        .map(|c| evaluate_node(c, run, node_id))
        .collect()
}
