//! Empirical-game layer: utility estimation between strategies,
//! dominance-ratio screening and Δ-relaxed equilibrium certification.
//!
//! Screening works against any [`UtilityOracle`]; [`SimulationOracle`]
//! backs it with Monte Carlo episodes, [`FrozenMatrix`] with fixed values.

mod certify;
mod screen;
mod space;

pub use certify::{
    assemble_report, delta_check, CertificationReport, ClauseCompliance, ClauseCounts,
    DeviationBound, Verdict,
};
pub use screen::{
    dominance_ratio, pair_order, screen, screening_pair_index, symmetric_optimum, Elimination,
    FrozenMatrix, ScreenState, ScreeningResult, UtilityMatrix, UtilityOracle,
};
pub use space::{StrategyEntry, StrategySpace};

use serde::{Deserialize, Serialize};

use crate::automata::EnergyModel;
use crate::cbtl::{
    builtin_phi, builtin_psi, evaluate_network, evaluate_node, is_availability_clause,
    node_clauses, PredicateAst,
};
use crate::error::{Error, Result};
use crate::stats::{
    mean_se, EpisodeMetrics, Estimator, PairEvidence, UtilityEstimate, DISPLAY_ALPHA,
};
use crate::workload::Scenario;

/// Node objective `phi` (the utility predicate, judged on node 0) and
/// network objective `psi` (reported as a compliance clause).
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub phi: PredicateAst,
    pub psi: PredicateAst,
}

impl Objective {
    pub fn builtin(scenario: &Scenario) -> Self {
        Objective {
            phi: builtin_phi(scenario),
            psi: builtin_psi(scenario),
        }
    }
}

/// Aggregate episode figures for one profile pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub runs: u64,
    pub delivery_mean: f64,
    pub delivery_se: Option<f64>,
    pub energy_mean_mj: f64,
    pub energy_se_mj: Option<f64>,
    pub alarm_latency_mean: Option<f64>,
    pub alarm_latency_se: Option<f64>,
}

impl MetricSummary {
    pub fn from_metrics(metrics: &[EpisodeMetrics]) -> Self {
        let summarize = |xs: Vec<f64>| -> (Option<f64>, Option<f64>) {
            match xs.len() {
                0 => (None, None),
                1 => (Some(xs[0]), None),
                _ => mean_se(&xs).map_or((None, None), |(m, s)| (Some(m), Some(s))),
            }
        };
        let (d, dse) = summarize(metrics.iter().map(|m| m.delivery_ratio).collect());
        let (e, ese) = summarize(metrics.iter().map(|m| m.energy_per_cycle_mj).collect());
        let (a, ase) = summarize(
            metrics
                .iter()
                .filter_map(|m| m.alarm_latency_mean)
                .collect(),
        );
        MetricSummary {
            runs: metrics.len() as u64,
            delivery_mean: d.unwrap_or(f64::NAN),
            delivery_se: dse,
            energy_mean_mj: e.unwrap_or(f64::NAN),
            energy_se_mj: ese,
            alarm_latency_mean: a,
            alarm_latency_se: ase,
        }
    }
}

/// Everything needed to simulate profile pairs of a strategy space.
#[derive(Clone, Copy)]
pub struct Simulation<'a> {
    pub scenario: &'a Scenario,
    pub energy: &'a EnergyModel,
    pub space: &'a StrategySpace,
    pub objective: &'a Objective,
    pub estimator: &'a Estimator,
}

impl Simulation<'_> {
    fn run<T, F>(
        &self,
        deviant: usize,
        field: usize,
        m: u64,
        pair_index: u64,
        f: F,
    ) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&crate::medium::RunOutcome) -> Result<T> + Sync,
    {
        let d = self.space.get(deviant);
        let fl = self.space.get(field);
        self.estimator
            .run_pair(
                self.scenario,
                self.energy,
                &d.config,
                &fl.config,
                m,
                pair_index,
                f,
            )
            .map_err(|e| Error::Pair {
                deviant: d.id.clone(),
                field: fl.id.clone(),
                source: Box::new(e),
            })
    }
}

/// Monte Carlo oracle that also keeps the audit trail.
pub struct SimulationOracle<'a> {
    sim: Simulation<'a>,
    pub evidence: Vec<PairEvidence>,
    /// Episode figures of every self-play estimate, by space index.
    pub self_play: Vec<Option<MetricSummary>>,
}

impl<'a> SimulationOracle<'a> {
    pub fn new(sim: Simulation<'a>) -> Self {
        SimulationOracle {
            self_play: vec![None; sim.space.len()],
            sim,
            evidence: Vec::new(),
        }
    }
}

impl UtilityOracle for SimulationOracle<'_> {
    fn estimate(
        &mut self,
        deviant: usize,
        field: usize,
        m: u64,
        pair_index: u64,
    ) -> Result<UtilityEstimate> {
        let phi = &self.sim.objective.phi;
        let rows = self.sim.run(deviant, field, m, pair_index, |run| {
            Ok((evaluate_node(phi, run, 0)?, EpisodeMetrics::from_run(run)))
        })?;
        let bits: Vec<bool> = rows.iter().map(|r| r.0).collect();
        let (did, fid) = (
            &self.sim.space.get(deviant).id,
            &self.sim.space.get(field).id,
        );
        let seeds = self.sim.estimator.seeds();
        let ev = PairEvidence::from_bits(did, fid, pair_index, seeds.master_seed, &bits);
        if deviant == field {
            let metrics: Vec<EpisodeMetrics> = rows.iter().map(|r| r.1).collect();
            self.self_play[field] = Some(MetricSummary::from_metrics(&metrics));
        }
        let est = UtilityEstimate::from_counts(
            ev.k,
            m,
            DISPLAY_ALPHA,
            (did.clone(), fid.clone()),
            pair_index,
            seeds.id(),
        )?;
        self.evidence.push(ev);
        Ok(est)
    }
}

/// Self-play utilities of every config with `m_base` runs each.
pub fn build_self_play(
    sim: Simulation<'_>,
    m_base: u64,
) -> Result<(UtilityMatrix, SimulationOracle<'_>)> {
    let n = sim.space.len();
    let mut oracle = SimulationOracle::new(sim);
    let mut matrix = UtilityMatrix::default();
    for i in 0..n {
        matrix
            .entries
            .push(oracle.estimate(i, i, m_base, screening_pair_index(n, i, i))?);
    }
    Ok((matrix, oracle))
}

/// Certification pair index for `(deviant, field)`: the block after all
/// screening indices.
pub fn certification_pair_index(n: usize, deviant: usize, field: usize) -> u64 {
    (n * n + deviant * n + field) as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationOutcome {
    pub report: CertificationReport,
    pub evidence: Vec<PairEvidence>,
    pub self_play: MetricSummary,
}

/// Certifies `candidate` against every unilateral deviation in the space.
///
/// Each `phi` clause and `psi` must reach `clause_threshold` (the
/// availability clause: the scenario's `rho_min`) at the lower bound.
pub fn certify(
    sim: Simulation<'_>,
    candidate: &str,
    m_cert: u64,
    alpha_grid: f64,
    delta_target: f64,
    clause_threshold: f64,
) -> Result<CertificationOutcome> {
    if m_cert == 0 {
        return Err(Error::Argument("m_cert must be >= 1".into()));
    }
    let n = sim.space.len();
    let c = sim.space.index_of(candidate)?;
    let seeds = sim.estimator.seeds();
    let objective = sim.objective;

    let self_pair = certification_pair_index(n, c, c);
    let rows = sim.run(c, c, m_cert, self_pair, |run| {
        Ok((
            evaluate_node(&objective.phi, run, 0)?,
            node_clauses(&objective.phi, run, 0)?,
            evaluate_network(&objective.psi, run)?,
            EpisodeMetrics::from_run(run),
        ))
    })?;
    let self_bits: Vec<bool> = rows.iter().map(|r| r.0).collect();
    let self_ev = PairEvidence::from_bits(
        candidate,
        candidate,
        self_pair,
        seeds.master_seed,
        &self_bits,
    );

    let phi_clauses = objective.phi.clauses();
    let mut clauses: Vec<ClauseCounts> = phi_clauses
        .iter()
        .enumerate()
        .map(|(i, clause)| ClauseCounts {
            clause: clause.to_string(),
            successes: rows.iter().filter(|r| r.1[i]).count() as u64,
            threshold: if is_availability_clause(clause) {
                sim.scenario.rho_min
            } else {
                clause_threshold
            },
        })
        .collect();
    clauses.push(ClauseCounts {
        clause: objective.psi.to_string(),
        successes: rows.iter().filter(|r| r.2).count() as u64,
        threshold: clause_threshold,
    });
    let metrics: Vec<EpisodeMetrics> = rows.iter().map(|r| r.3).collect();

    let mut deviations = Vec::with_capacity(n);
    let mut evidence = Vec::with_capacity(n);
    for d in 0..n {
        let id = sim.space.get(d).id.clone();
        if d == c {
            deviations.push((id, self_ev.k));
            evidence.push(self_ev.clone());
            continue;
        }
        let pair = certification_pair_index(n, d, c);
        let bits = sim.run(d, c, m_cert, pair, |run| {
            evaluate_node(&objective.phi, run, 0)
        })?;
        let ev = PairEvidence::from_bits(&id, candidate, pair, seeds.master_seed, &bits);
        deviations.push((id, ev.k));
        evidence.push(ev);
    }

    let report = assemble_report(
        candidate,
        m_cert,
        self_ev.k,
        &deviations,
        &clauses,
        alpha_grid,
        delta_target,
    )?;
    Ok(CertificationOutcome {
        report,
        evidence,
        self_play: MetricSummary::from_metrics(&metrics),
    })
}
