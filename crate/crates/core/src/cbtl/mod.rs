//! Cost-bounded temporal predicates over episode outcomes.
//!
//! Concrete syntax:
//!
//! ```text
//! formula     := disjunction
//! disjunction := conjunction ('or' conjunction)*
//! conjunction := unary ('and' unary)*
//! unary       := 'not' unary | '(' formula ')' | temporal | atom
//! temporal    := 'within' '[' metric '<=' number unit ']' formula
//!              | 'always' '(' trigger '->' 'eventually' '<=' number unit formula ')'
//! atom        := metric cmp number unit?
//! ```
//!
//! Time metrics take the `s` suffix, energy metrics `mJ`; counts and
//! fractions are bare. [`fmt::Display`](std::fmt::Display) on
//! [`PredicateAst`] prints the canonical form, and `parse(&ast.to_string())`
//! returns `ast`.
//!
//! ```
//! use gridmac::cbtl::{builtin_phi, parse};
//! use gridmac::workload::Scenario;
//!
//! let phi = builtin_phi(&Scenario::flagship());
//! assert_eq!(parse(&phi.to_string()).unwrap(), phi);
//! ```

mod ast;
mod eval;
mod parser;
mod print;

pub use ast::{Atom, Comparator, Dimension, Metric, PredicateAst, Scope, Trigger, Unit};
pub use eval::{check_scope, evaluate_network, evaluate_node, node_clauses};
pub use parser::{parse, ParseError};

use crate::workload::{derive_n_req, Scenario};

/// Grid operational predicate for one node: a status report each cycle
/// within `t_rep` under the energy budget, alarms within `t_alarm`, the
/// per-cycle budget, and availability during blackout recovery.
pub fn builtin_phi(scenario: &Scenario) -> PredicateAst {
    PredicateAst::And(vec![
        PredicateAst::within(
            Metric::Energy,
            scenario.e_max,
            PredicateAst::atom(Metric::StatusLatency, Comparator::Le, scenario.t_rep),
        ),
        PredicateAst::atom(Metric::AlarmLatency, Comparator::Le, scenario.t_alarm),
        PredicateAst::atom(Metric::EnergyPerCycle, Comparator::Le, scenario.e_max),
        PredicateAst::atom(Metric::AwakeFraction, Comparator::Ge, scenario.rho_min),
    ])
}

/// Network objective: every grid event is answered by `N_req` nodes within `t_alarm`.
pub fn builtin_psi(scenario: &Scenario) -> PredicateAst {
    PredicateAst::always(
        scenario.t_alarm,
        PredicateAst::atom(
            Metric::RespondersCount,
            Comparator::Ge,
            derive_n_req(scenario) as f64,
        ),
    )
}

/// True when the clause is a lower bound on availability.
pub fn is_availability_clause(clause: &PredicateAst) -> bool {
    matches!(clause, PredicateAst::Atom(a) if a.metric == Metric::AwakeFraction && !a.comparator.is_upper_bound())
}
