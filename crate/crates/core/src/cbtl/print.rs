use std::fmt;

use super::ast::{Atom, PredicateAst, Unit};

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}",
            self.metric.name(),
            self.comparator.symbol(),
            self.threshold
        )?;
        if let Some(unit) = self.metric.dimension().unit() {
            write!(f, " {}", unit.symbol())?;
        }
        Ok(())
    }
}

fn junction(ast: &PredicateAst) -> bool {
    matches!(ast, PredicateAst::And(_) | PredicateAst::Or(_))
}

fn grouped(f: &mut fmt::Formatter<'_>, ast: &PredicateAst, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({ast})")
    } else {
        write!(f, "{ast}")
    }
}

/// Canonical rendering: single spaces, lowercase keywords, `s` and `mJ`
/// suffixes. Parsing the output yields the same tree.
impl fmt::Display for PredicateAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateAst::Atom(a) => write!(f, "{a}"),
            PredicateAst::And(items) | PredicateAst::Or(items) => {
                let sep = if matches!(self, PredicateAst::And(_)) {
                    " and "
                } else {
                    " or "
                };
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    grouped(f, item, junction(item) || item.is_temporal())?;
                }
                Ok(())
            }
            PredicateAst::Not(inner) => {
                f.write_str("not ")?;
                grouped(f, inner, junction(inner) || inner.is_temporal())
            }
            PredicateAst::CostBoundedEventually {
                cost_metric,
                bound,
                body,
            } => {
                let unit = cost_metric.dimension().unit().unwrap_or(Unit::MilliJoules);
                write!(
                    f,
                    "within [{} <= {} {}] ",
                    cost_metric.name(),
                    bound,
                    unit.symbol()
                )?;
                grouped(f, body, junction(body))
            }
            PredicateAst::AlwaysImpliesWithin {
                trigger,
                deadline,
                body,
            } => {
                write!(
                    f,
                    "always ({} -> eventually <= {} s {})",
                    trigger.name(),
                    deadline,
                    body
                )
            }
        }
    }
}
