use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::artifact::{
    scenario_fingerprint, Artifact, CertificationArtifact, ScreeningArtifact, SelfPlayRow,
};
use super::report::{build_rows, ReportRow};
use crate::cbtl::evaluate_node;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::game::{
    certify, screen, symmetric_optimum, MetricSummary, Objective, Simulation, SimulationOracle,
    StrategySpace, Verdict,
};
use crate::medium::{run_episode_traced, TxOutcome};
use crate::stats::{EpisodeMetrics, Estimator, SeedPlan, Stream, UtilityEstimate, DISPLAY_ALPHA};
use crate::workload::generate_trace;

/// Seed stream used by `simulate`, after the screening and certification blocks.
pub fn simulation_pair_index(n: usize, index: usize) -> u64 {
    (2 * n * n + index * n + index) as u64
}

struct Prepared {
    space: StrategySpace,
    objective: Objective,
    estimator: Estimator,
    fingerprint: String,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let objective = config.objective()?;
    Ok(Prepared {
        space: config.space()?,
        fingerprint: scenario_fingerprint(config, &objective)?,
        objective,
        estimator: Estimator::new(SeedPlan::new(config.master_seed), config.workers)?,
    })
}

impl Prepared {
    fn sim<'a>(&'a self, config: &'a ExperimentConfig) -> Simulation<'a> {
        Simulation {
            scenario: &config.scenario,
            energy: &config.energy_model,
            space: &self.space,
            objective: &self.objective,
            estimator: &self.estimator,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLine {
    pub run: u64,
    pub phi: bool,
    pub metrics: EpisodeMetrics,
    pub collisions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub profile: String,
    pub master_seed: u64,
    pub runs: Vec<RunLine>,
    pub aggregate: MetricSummary,
    pub utility: UtilityEstimate,
    /// Nearest-rank 50th, 90th and 99th percentiles over delivered alarms.
    pub alarm_latency_percentiles: Option<[f64; 3]>,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Symmetric self-play of one profile; optionally dumps run 0's trace.
pub fn cmd_simulate(
    config: &ExperimentConfig,
    profile: &str,
    runs: u64,
    trace_dump: Option<&Path>,
) -> Result<SimulationSummary> {
    let p = prepare(config)?;
    let index = p.space.index_of(profile)?;
    let cfg = p.space.get(index).config;
    let pair = simulation_pair_index(p.space.len(), index);
    let phi = &p.objective.phi;
    let rows = p.estimator.run_pair(
        &config.scenario,
        &config.energy_model,
        &cfg,
        &cfg,
        runs,
        pair,
        |run| {
            let latencies: Vec<f64> = run
                .per_node
                .iter()
                .flat_map(|n| n.alarm_latencies())
                .collect();
            let collisions = run
                .transmissions
                .iter()
                .filter(|t| t.outcome == TxOutcome::Collided)
                .count() as u64;
            Ok((
                evaluate_node(phi, run, 0)?,
                EpisodeMetrics::from_run(run),
                collisions,
                latencies,
            ))
        },
    )?;

    if let Some(path) = trace_dump {
        let run_seed = p.estimator.seeds().run_seed(pair, 0);
        let trace = generate_trace(
            &config.scenario,
            SeedPlan::stream_seed(run_seed, Stream::Workload),
        )?;
        let assignment = vec![cfg; config.scenario.n_nodes];
        let mut sink = Vec::new();
        run_episode_traced(
            &config.scenario,
            &config.energy_model,
            &assignment,
            &trace,
            SeedPlan::stream_seed(run_seed, Stream::Simulation),
            &mut sink,
        )?;
        let mut text = trace.to_lines();
        for r in &sink {
            let _ = writeln!(text, "{r}");
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }

    let mut latencies: Vec<f64> = rows.iter().flat_map(|r| r.3.iter().copied()).collect();
    latencies.sort_by(f64::total_cmp);
    let metrics: Vec<EpisodeMetrics> = rows.iter().map(|r| r.1).collect();
    let k = rows.iter().filter(|r| r.0).count() as u64;
    Ok(SimulationSummary {
        profile: profile.to_string(),
        master_seed: config.master_seed,
        utility: UtilityEstimate::from_counts(
            k,
            runs,
            DISPLAY_ALPHA,
            (profile.to_string(), profile.to_string()),
            pair,
            p.estimator.seeds().id(),
        )?,
        runs: rows
            .iter()
            .enumerate()
            .map(|(i, r)| RunLine {
                run: i as u64,
                phi: r.0,
                metrics: r.1,
                collisions: r.2,
            })
            .collect(),
        aggregate: MetricSummary::from_metrics(&metrics),
        alarm_latency_percentiles: (!latencies.is_empty()).then(|| {
            [
                percentile(&latencies, 0.5),
                percentile(&latencies, 0.9),
                percentile(&latencies, 0.99),
            ]
        }),
    })
}

fn pm(value: f64, se: Option<f64>, decimals: usize) -> String {
    match se {
        Some(se) => format!("{value:.decimals$} ± {se:.decimals$}"),
        None => format!("{value:.decimals$}"),
    }
}

impl SimulationSummary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "profile {} x{} runs (master seed {})",
            self.profile,
            self.runs.len(),
            self.master_seed
        );
        let _ = writeln!(
            s,
            "{:>5}  {:>9}  {:>9}  {:>10}  {:>10}  phi",
            "run", "delivery%", "energy_mJ", "alarm_s", "collisions"
        );
        for r in &self.runs {
            let alarm = r
                .metrics
                .alarm_latency_mean
                .map_or("-".to_string(), |a| format!("{a:.4}"));
            let _ = writeln!(
                s,
                "{:>5}  {:>9.1}  {:>9.2}  {:>10}  {:>10}  {}",
                r.run,
                r.metrics.delivery_ratio * 100.0,
                r.metrics.energy_per_cycle_mj,
                alarm,
                r.collisions,
                if r.phi { "yes" } else { "no" }
            );
        }
        let a = &self.aggregate;
        let _ = writeln!(s, "aggregate");
        let _ = writeln!(
            s,
            "  delivery ratio   {} %",
            pm(a.delivery_mean * 100.0, a.delivery_se.map(|x| x * 100.0), 1)
        );
        let _ = writeln!(
            s,
            "  energy per cycle {} mJ",
            pm(a.energy_mean_mj, a.energy_se_mj, 2)
        );
        match self.alarm_latency_percentiles {
            Some([p50, p90, p99]) => {
                let _ = writeln!(
                    s,
                    "  alarm latency    p50 {p50:.4} s, p90 {p90:.4} s, p99 {p99:.4} s"
                );
            }
            None => {
                let _ = writeln!(s, "  alarm latency    no alarms delivered");
            }
        }
        let se = (self.runs.len() > 1).then_some(self.utility.se);
        let _ = writeln!(s, "  utility          {}", pm(self.utility.p_hat, se, 3));
        s
    }
}

/// Runs dominance-ratio screening with `m_screen` runs per estimate.
pub fn cmd_screen(
    config: &ExperimentConfig,
) -> Result<(ScreeningArtifact, Vec<crate::stats::PairEvidence>)> {
    let p = prepare(config)?;
    let mut oracle = SimulationOracle::new(p.sim(config));
    let result = screen(
        &p.space,
        &mut oracle,
        config.lambda,
        config.m_screen,
        config.m_screen,
    )?;
    let optimum = symmetric_optimum(&p.space, &result.matrix)?;
    let self_play = p
        .space
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let utility = result
                .matrix
                .get(id, id)
                .cloned()
                .ok_or_else(|| Error::Internal(format!("no diagonal for {id}")))?;
            let metrics = oracle.self_play[i]
                .clone()
                .ok_or_else(|| Error::Internal(format!("no metrics for {id}")))?;
            Ok(SelfPlayRow {
                id: id.to_string(),
                utility,
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let artifact = ScreeningArtifact {
        fingerprint: p.fingerprint.clone(),
        master_seed: config.master_seed,
        scenario: config.scenario.clone(),
        strategy_space: config.strategy_space.clone(),
        m_base: config.m_screen,
        m_step: config.m_screen,
        result,
        symmetric_optimum: optimum,
        self_play,
    };
    Ok((artifact, oracle.evidence))
}

impl ScreeningArtifact {
    pub fn render(&self) -> String {
        let r = &self.result;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "screening: lambda {}, {} runs per estimate, {} episodes",
            r.lambda, self.m_step, r.total_runs
        );
        for row in &self.self_play {
            let _ = writeln!(
                s,
                "  U({0},{0}) = {1:.3} ± {2:.3}",
                row.id, row.utility.p_hat, row.utility.se
            );
        }
        for e in &r.eliminations {
            let _ = writeln!(
                s,
                "  eliminated {} by {}: {:.3} < {} x {:.3}",
                e.eliminated, e.witness, e.self_utility, e.lambda, e.cross_utility
            );
        }
        let ratios: Vec<String> = r
            .min_ratios
            .iter()
            .map(|(id, v)| {
                format!(
                    "{id} ({})",
                    v.map_or("inf".to_string(), |x| format!("{x:.3}"))
                )
            })
            .collect();
        let _ = writeln!(s, "  survivors: {}", ratios.join(", "));
        let _ = writeln!(s, "  selected: {}", r.selected);
        let _ = writeln!(s, "  symmetric optimum: {}", self.symmetric_optimum);
        s
    }
}

/// Certifies `candidate` with `m_cert` runs per comparison.
pub fn cmd_certify(
    config: &ExperimentConfig,
    candidate: &str,
) -> Result<(CertificationArtifact, Vec<crate::stats::PairEvidence>)> {
    let p = prepare(config)?;
    let outcome = certify(
        p.sim(config),
        candidate,
        config.m_cert,
        config.alpha_grid,
        config.delta_target,
        config.clause_threshold,
    )?;
    let artifact = CertificationArtifact {
        fingerprint: p.fingerprint.clone(),
        master_seed: config.master_seed,
        scenario: config.scenario.clone(),
        strategy_space: config.strategy_space.clone(),
        report: outcome.report,
        self_play: outcome.self_play,
    };
    Ok((artifact, outcome.evidence))
}

impl CertificationArtifact {
    pub fn render(&self) -> String {
        let r = &self.report;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "certification of {}: {} runs per comparison, alpha {} ({} per comparison)",
            r.candidate, r.m_cert, r.alpha_grid, r.alpha_per_comparison
        );
        for d in &r.per_deviation {
            let ratio = d.ratio.map_or("inf".to_string(), |x| format!("{x:.4}"));
            let _ = writeln!(
                s,
                "  vs {:<6} k={:<7} lower(self) {:.4}  upper(dev) {:.4}  ratio {}",
                d.deviation, d.successes, d.lower_bound_self, d.upper_bound_dev, ratio
            );
        }
        for c in &r.constraint_compliance {
            let _ = writeln!(
                s,
                "  clause {:<60} rate {:.4} lower {:.4} >= {} {}",
                c.clause,
                c.rate,
                c.lower_bound,
                c.threshold,
                if c.passed { "ok" } else { "FAIL" }
            );
        }
        let delta = r
            .delta_grid
            .map_or("undefined".to_string(), |d| format!("{d:.4}"));
        let verdict = match r.verdict {
            Verdict::Certified => "certified",
            Verdict::NotCertified => "not certified",
        };
        let _ = writeln!(
            s,
            "  delta_grid {delta} (target {}): {verdict}",
            r.delta_target
        );
        for d in &r.diagnostics {
            let _ = writeln!(s, "  note: {d}");
        }
        s
    }
}

pub fn cmd_report(artifacts: &[Artifact]) -> Result<Vec<ReportRow>> {
    build_rows(artifacts)
}
