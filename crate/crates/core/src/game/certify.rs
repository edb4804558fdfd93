use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{bonferroni, clopper_pearson_lower, clopper_pearson_upper};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationBound {
    pub deviation: String,
    pub successes: u64,
    pub trials: u64,
    pub lower_bound_self: f64,
    pub upper_bound_dev: f64,
    /// `lower_bound_self / upper_bound_dev`; `None` when the upper bound is zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseCompliance {
    pub clause: String,
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    /// One-sided lower confidence bound at the per-comparison level.
    pub lower_bound: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Clause satisfaction counts from the candidate's self-play runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseCounts {
    pub clause: String,
    pub successes: u64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub candidate: String,
    pub self_successes: u64,
    pub per_deviation: Vec<DeviationBound>,
    /// Minimum finite deviation ratio; `None` if every upper bound is zero.
    pub delta_grid: Option<f64>,
    pub delta_target: f64,
    pub alpha_grid: f64,
    pub alpha_per_comparison: f64,
    pub m_cert: u64,
    pub verdict: Verdict,
    pub constraint_compliance: Vec<ClauseCompliance>,
    pub diagnostics: Vec<String>,
}

/// `u_self >= delta * u_dev`.
pub fn delta_check(u_self: f64, u_dev: f64, delta: f64) -> bool {
    u_self >= delta * u_dev
}

/// Builds the report from success counts out of `m_cert` runs each.
///
/// `deviations` must cover every config of the space, the candidate
/// included; their number is the Bonferroni divisor.
pub fn assemble_report(
    candidate: &str,
    m_cert: u64,
    self_successes: u64,
    deviations: &[(String, u64)],
    clauses: &[ClauseCounts],
    alpha_grid: f64,
    delta_target: f64,
) -> Result<CertificationReport> {
    if m_cert == 0 {
        return Err(Error::Argument("m_cert must be >= 1".into()));
    }
    if !deviations.iter().any(|(id, _)| id == candidate) {
        return Err(Error::Argument(format!(
            "deviations must include the candidate `{candidate}`"
        )));
    }
    let alpha_pc = bonferroni(alpha_grid, deviations.len())?;
    let lower_self = clopper_pearson_lower(self_successes, m_cert, alpha_pc)?;
    let mut per_deviation = Vec::with_capacity(deviations.len());
    for (id, k) in deviations {
        let upper = clopper_pearson_upper(*k, m_cert, alpha_pc)?;
        per_deviation.push(DeviationBound {
            deviation: id.clone(),
            successes: *k,
            trials: m_cert,
            lower_bound_self: lower_self,
            upper_bound_dev: upper,
            ratio: (upper > 0.0).then(|| lower_self / upper),
        });
    }
    let mut diagnostics = Vec::new();
    let delta_grid = per_deviation
        .iter()
        .filter_map(|d| d.ratio)
        .min_by(f64::total_cmp);
    match delta_grid {
        None => {
            diagnostics.push("every deviation upper bound is zero; no finite ratio".to_string())
        }
        Some(d) if d > 1.0 + 1e-12 => {
            return Err(Error::Internal(format!(
                "delta_grid {d} exceeds 1: confidence bounds crossed"
            )))
        }
        Some(_) => {}
    }

    let mut constraint_compliance = Vec::with_capacity(clauses.len());
    for c in clauses {
        let lower_bound = clopper_pearson_lower(c.successes, m_cert, alpha_pc)?;
        constraint_compliance.push(ClauseCompliance {
            clause: c.clause.clone(),
            successes: c.successes,
            trials: m_cert,
            rate: c.successes as f64 / m_cert as f64,
            lower_bound,
            threshold: c.threshold,
            passed: lower_bound >= c.threshold,
        });
    }
    for c in constraint_compliance.iter().filter(|c| !c.passed) {
        diagnostics.push(format!(
            "clause `{}` lower bound {:.4} below {}",
            c.clause, c.lower_bound, c.threshold
        ));
    }

    let robust = delta_grid.is_some_and(|d| d >= delta_target);
    let verdict = if robust && constraint_compliance.iter().all(|c| c.passed) {
        Verdict::Certified
    } else {
        Verdict::NotCertified
    };
    Ok(CertificationReport {
        candidate: candidate.to_string(),
        self_successes,
        per_deviation,
        delta_grid,
        delta_target,
        alpha_grid,
        alpha_per_comparison: alpha_pc,
        m_cert,
        verdict,
        constraint_compliance,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_check_arithmetic() {
        assert!(delta_check(0.914, 0.940, 0.971));
        assert!(delta_check(0.37, 0.37, 1.0));
        assert!(!delta_check(0.80, 0.95, 0.90));
    }

    #[test]
    fn report_invariants() {
        let devs = vec![
            ("A".to_string(), 9_000),
            ("B".to_string(), 9_700),
            ("C".to_string(), 8_000),
        ];
        let r = assemble_report("B", 10_000, 9_700, &devs, &[], 0.01, 0.995).unwrap();
        assert!((r.alpha_per_comparison - 0.01 / 3.0).abs() < 1e-15);
        let min = r
            .per_deviation
            .iter()
            .filter_map(|d| d.ratio)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.delta_grid, Some(min));
        // the self comparison is the binding one here
        assert_eq!(r.per_deviation[1].ratio, Some(min));
        assert!(min < 1.0);
        assert_eq!(r.verdict, Verdict::NotCertified);
        let r = assemble_report("B", 10_000, 9_700, &devs, &[], 0.01, 0.98).unwrap();
        assert!(r.delta_grid.unwrap() > 0.98 && r.verdict == Verdict::Certified);
    }

    #[test]
    fn failing_clause_blocks_certification() {
        let devs = vec![("A".to_string(), 10_000)];
        let clauses = [ClauseCounts {
            clause: "awake_fraction >= 0.9".into(),
            successes: 8_000,
            threshold: 0.9,
        }];
        let r = assemble_report("A", 10_000, 10_000, &devs, &clauses, 0.01, 0.5).unwrap();
        assert!(!r.constraint_compliance[0].passed);
        assert_eq!(r.verdict, Verdict::NotCertified);
        assert_eq!(r.diagnostics.len(), 1);
    }

    #[test]
    fn target_above_one_never_certifies() {
        let devs = vec![("A".to_string(), 10_000)];
        let r = assemble_report("A", 10_000, 10_000, &devs, &[], 0.01, 1.01).unwrap();
        assert_eq!(r.verdict, Verdict::NotCertified);
    }
}
