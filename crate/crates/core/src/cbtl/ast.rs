use serde::{Deserialize, Serialize};

/// Physical dimension of a metric's value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Time,
    Energy,
    Count,
    Fraction,
}

impl Dimension {
    /// The unit a threshold of this dimension must carry, if any.
    pub fn unit(self) -> Option<Unit> {
        match self {
            Dimension::Time => Some(Unit::Seconds),
            Dimension::Energy => Some(Unit::MilliJoules),
            Dimension::Count | Dimension::Fraction => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    Node,
    Network,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Latency of a status report, seconds.
    StatusLatency,
    /// Latency of an alarm frame, seconds; undelivered alarms count as infinite.
    AlarmLatency,
    /// Energy spent since the start of the current cycle, mJ.
    Energy,
    EnergyPerCycle,
    /// Frames delivered in the cycle.
    SuccessCount,
    StatusDeliveredWithinCycle,
    /// Fraction of blackout-recovery time spent awake.
    AwakeFraction,
    /// Nodes whose alarm frame arrived within the enclosing deadline.
    RespondersCount,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::StatusLatency,
        Metric::AlarmLatency,
        Metric::Energy,
        Metric::EnergyPerCycle,
        Metric::SuccessCount,
        Metric::StatusDeliveredWithinCycle,
        Metric::AwakeFraction,
        Metric::RespondersCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::StatusLatency => "status_latency",
            Metric::AlarmLatency => "alarm_latency",
            Metric::Energy => "energy",
            Metric::EnergyPerCycle => "energy_per_cycle",
            Metric::SuccessCount => "success_count",
            Metric::StatusDeliveredWithinCycle => "status_delivered_within_cycle",
            Metric::AwakeFraction => "awake_fraction",
            Metric::RespondersCount => "responders_count",
        }
    }

    pub fn from_name(name: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Metric::StatusLatency | Metric::AlarmLatency => Dimension::Time,
            Metric::Energy | Metric::EnergyPerCycle => Dimension::Energy,
            Metric::SuccessCount | Metric::StatusDeliveredWithinCycle | Metric::RespondersCount => {
                Dimension::Count
            }
            Metric::AwakeFraction => Dimension::Fraction,
        }
    }

    pub fn scope(self) -> Scope {
        match self {
            Metric::RespondersCount => Scope::Network,
            _ => Scope::Node,
        }
    }

    /// Comma-separated vocabulary, for error messages.
    pub fn vocabulary() -> String {
        Metric::ALL.map(Metric::name).join(", ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "s")]
    Seconds,
    #[serde(rename = "mJ")]
    MilliJoules,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Seconds => "s",
            Unit::MilliJoules => "mJ",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    Le,
    Lt,
    Ge,
    Gt,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Le => "<=",
            Comparator::Lt => "<",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Le => lhs <= rhs,
            Comparator::Lt => lhs < rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Gt => lhs > rhs,
        }
    }

    /// True for `<=` and `<`, where a larger threshold is more permissive.
    pub fn is_upper_bound(self) -> bool {
        matches!(self, Comparator::Le | Comparator::Lt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Trigger {
    GridEvent,
}

impl Trigger {
    pub fn name(self) -> &'static str {
        match self {
            Trigger::GridEvent => "grid_event",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub metric: Metric,
    pub comparator: Comparator,
    pub threshold: f64,
}

/// Parsed predicate. `And` and `Or` hold at least two operands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PredicateAst {
    Atom(Atom),
    And(Vec<PredicateAst>),
    Or(Vec<PredicateAst>),
    Not(Box<PredicateAst>),
    /// `within [cost_metric <= bound] body`
    CostBoundedEventually {
        cost_metric: Metric,
        bound: f64,
        body: Box<PredicateAst>,
    },
    /// `always (trigger -> eventually <= deadline s body)`
    AlwaysImpliesWithin {
        trigger: Trigger,
        deadline: f64,
        body: Box<PredicateAst>,
    },
}

impl PredicateAst {
    pub fn atom(metric: Metric, comparator: Comparator, threshold: f64) -> Self {
        PredicateAst::Atom(Atom {
            metric,
            comparator,
            threshold,
        })
    }

    pub fn negation(inner: PredicateAst) -> Self {
        PredicateAst::Not(Box::new(inner))
    }

    pub fn within(cost_metric: Metric, bound: f64, body: PredicateAst) -> Self {
        PredicateAst::CostBoundedEventually {
            cost_metric,
            bound,
            body: Box::new(body),
        }
    }

    pub fn always(deadline: f64, body: PredicateAst) -> Self {
        PredicateAst::AlwaysImpliesWithin {
            trigger: Trigger::GridEvent,
            deadline,
            body: Box::new(body),
        }
    }

    /// Top-level conjuncts; a non-conjunction is its own single clause.
    pub fn clauses(&self) -> Vec<&PredicateAst> {
        match self {
            PredicateAst::And(items) => items.iter().collect(),
            other => vec![other],
        }
    }

    /// Every metric mentioned anywhere in the formula, in preorder.
    pub fn metrics(&self) -> Vec<Metric> {
        let mut out = Vec::new();
        self.collect_metrics(&mut out);
        out
    }

    fn collect_metrics(&self, out: &mut Vec<Metric>) {
        match self {
            PredicateAst::Atom(a) => out.push(a.metric),
            PredicateAst::And(items) | PredicateAst::Or(items) => {
                items.iter().for_each(|i| i.collect_metrics(out))
            }
            PredicateAst::Not(inner) => inner.collect_metrics(out),
            PredicateAst::CostBoundedEventually {
                cost_metric, body, ..
            } => {
                out.push(*cost_metric);
                body.collect_metrics(out);
            }
            PredicateAst::AlwaysImpliesWithin { body, .. } => body.collect_metrics(out),
        }
    }

    pub fn is_temporal(&self) -> bool {
        matches!(
            self,
            PredicateAst::CostBoundedEventually { .. } | PredicateAst::AlwaysImpliesWithin { .. }
        )
    }
}
