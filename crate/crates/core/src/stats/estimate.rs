use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bernoulli_se;
use super::binomial::clopper_pearson;
use super::seed::{SeedPlan, Stream, PAIR_BITS, RUN_BITS};
use crate::automata::{EnergyModel, ProtocolConfig};
use crate::cbtl::{evaluate_node, PredicateAst};
use crate::error::{Error, Result};
use crate::medium::{run_episode, RunOutcome};
use crate::workload::{generate_trace, Scenario};

/// Two-sided level of the interval stored alongside every point estimate.
pub const DISPLAY_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub se: f64,
    pub alpha: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `(deviant id, field id)`.
    pub profile_pair: (String, String),
    pub pair_index: u64,
    pub seed_plan_id: String,
}

impl UtilityEstimate {
    pub fn from_counts(
        successes: u64,
        trials: u64,
        alpha: f64,
        profile_pair: (String, String),
        pair_index: u64,
        seed_plan_id: String,
    ) -> Result<Self> {
        let (ci_low, ci_high) = clopper_pearson(successes, trials, alpha)?;
        let p_hat = successes as f64 / trials as f64;
        Ok(UtilityEstimate {
            successes,
            trials,
            p_hat,
            se: bernoulli_se(p_hat, trials),
            alpha,
            ci_low,
            ci_high,
            profile_pair,
            pair_index,
            seed_plan_id,
        })
    }
}

/// Audit record for one estimated pair: enough to recount `k` and to
/// regenerate every episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEvidence {
    pub deviant: String,
    pub field: String,
    pub pair_index: u64,
    pub master_seed: u64,
    pub m: u64,
    pub k: u64,
    /// Per-run satisfaction, bit `i % 8` of byte `i / 8`, hex encoded.
    pub bitmap: String,
}

impl PairEvidence {
    pub fn from_bits(
        deviant: &str,
        field: &str,
        pair_index: u64,
        master_seed: u64,
        bits: &[bool],
    ) -> Self {
        let mut bytes = vec![0u8; bits.len().div_ceil(8)];
        for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            bytes[i / 8] |= 1 << (i % 8);
        }
        PairEvidence {
            deviant: deviant.to_string(),
            field: field.to_string(),
            pair_index,
            master_seed,
            m: bits.len() as u64,
            k: bits.iter().filter(|b| **b).count() as u64,
            bitmap: hex::encode(bytes),
        }
    }

    pub fn bits(&self) -> Result<Vec<bool>> {
        let bytes = hex::decode(&self.bitmap)
            .map_err(|e| Error::Artifact(format!("evidence bitmap: {e}")))?;
        if bytes.len() as u64 != self.m.div_ceil(8) {
            return Err(Error::Artifact(format!(
                "evidence bitmap holds {} bytes for {} runs",
                bytes.len(),
                self.m
            )));
        }
        Ok((0..self.m as usize)
            .map(|i| bytes[i / 8] >> (i % 8) & 1 == 1)
            .collect())
    }

    /// Successes recomputed from the bitmap.
    pub fn recount(&self) -> Result<u64> {
        Ok(self.bits()?.into_iter().filter(|b| *b).count() as u64)
    }
}

/// Per-episode figures averaged over all nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// Status frames delivered by their deadline over frames with known fate.
    pub delivery_ratio: f64,
    /// Mean over nodes of the per-cycle energy.
    pub energy_per_cycle_mj: f64,
    /// Mean latency over delivered alarm frames, if any.
    pub alarm_latency_mean: Option<f64>,
}

impl EpisodeMetrics {
    pub fn from_run(run: &RunOutcome) -> Self {
        let (mut ok, mut total) = (0u64, 0u64);
        let mut energy = 0.0;
        let (mut lat_sum, mut lat_n) = (0.0, 0u64);
        for node in &run.per_node {
            let (o, t) = node.status_delivery_counts(run.horizon);
            ok += u64::from(o);
            total += u64::from(t);
            energy += node.mean_cycle_energy_mj();
            for l in node.alarm_latencies() {
                lat_sum += l;
                lat_n += 1;
            }
        }
        EpisodeMetrics {
            delivery_ratio: if total == 0 {
                1.0
            } else {
                ok as f64 / total as f64
            },
            energy_per_cycle_mj: energy / run.per_node.len().max(1) as f64,
            alarm_latency_mean: (lat_n > 0).then(|| lat_sum / lat_n as f64),
        }
    }
}

/// Fans episodes out over a fixed-size worker pool.
pub struct Estimator {
    pool: rayon::ThreadPool,
    seeds: SeedPlan,
}

impl Estimator {
    /// `workers = 0` uses every available core.
    pub fn new(seeds: SeedPlan, workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Internal(format!("worker pool: {e}")))?;
        Ok(Estimator { pool, seeds })
    }

    pub fn seeds(&self) -> SeedPlan {
        self.seeds
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `m` episodes with node 0 on `deviant` and the rest on `field`,
    /// mapping each outcome through `f`. Results are in run order.
    #[allow(clippy::too_many_arguments)]
    pub fn run_pair<T, F>(
        &self,
        scenario: &Scenario,
        energy: &EnergyModel,
        deviant: &ProtocolConfig,
        field: &ProtocolConfig,
        m: u64,
        pair_index: u64,
        f: F,
    ) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&RunOutcome) -> Result<T> + Sync,
    {
        if m == 0 {
            return Err(Error::Argument("number of runs must be >= 1".into()));
        }
        if m >= 1 << RUN_BITS || pair_index >= 1 << PAIR_BITS {
            return Err(Error::Argument(format!(
                "run count {m} or pair index {pair_index} exceeds the seed plan range"
            )));
        }
        scenario.validate()?;
        let mut assignment = vec![*field; scenario.n_nodes];
        assignment[0] = *deviant;
        let seeds = self.seeds;
        self.pool.install(|| {
            (0..m)
                .into_par_iter()
                .map(|run| {
                    let run_seed = seeds.run_seed(pair_index, run);
                    let trace = generate_trace(
                        scenario,
                        SeedPlan::stream_seed(run_seed, Stream::Workload),
                    )?;
                    let outcome = run_episode(
                        scenario,
                        energy,
                        &assignment,
                        &trace,
                        SeedPlan::stream_seed(run_seed, Stream::Simulation),
                    )?;
                    f(&outcome)
                })
                .collect()
        })
    }
}

/// Estimates the probability that node 0 playing `deviant` against a field
/// of `field` satisfies `predicate`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_utility(
    estimator: &Estimator,
    scenario: &Scenario,
    energy: &EnergyModel,
    deviant: (&str, &ProtocolConfig),
    field: (&str, &ProtocolConfig),
    predicate: &PredicateAst,
    m: u64,
    pair_index: u64,
) -> Result<(UtilityEstimate, PairEvidence)> {
    let bits = estimator.run_pair(scenario, energy, deviant.1, field.1, m, pair_index, |run| {
        evaluate_node(predicate, run, 0)
    })?;
    let seeds = estimator.seeds();
    let evidence =
        PairEvidence::from_bits(deviant.0, field.0, pair_index, seeds.master_seed, &bits);
    let estimate = UtilityEstimate::from_counts(
        evidence.k,
        m,
        DISPLAY_ALPHA,
        (deviant.0.to_string(), field.0.to_string()),
        pair_index,
        seeds.id(),
    )?;
    Ok((estimate, evidence))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitmap_round_trip() {
        let bits: Vec<bool> = (0..19).map(|i| i % 3 == 0 || i == 18).collect();
        let ev = PairEvidence::from_bits("A", "B", 7, 1, &bits);
        assert_eq!(ev.bits().unwrap(), bits);
        assert_eq!(ev.recount().unwrap(), ev.k);
        assert_eq!(ev.bitmap.len(), 6);
        // run 0 is the least significant bit of the first byte
        assert!(ev.bitmap.starts_with("49"));
    }

    #[test]
    fn point_estimate_from_indicators() {
        let e = UtilityEstimate::from_counts(3, 4, 0.05, ("a".into(), "a".into()), 0, "x".into())
            .unwrap();
        assert_eq!(e.p_hat, 0.75);
        assert!(e.ci_low <= e.p_hat && e.p_hat <= e.ci_high);
        let all = UtilityEstimate::from_counts(9, 9, 0.05, ("a".into(), "a".into()), 0, "x".into())
            .unwrap();
        assert_eq!((all.p_hat, all.se), (1.0, 0.0));
    }

    #[test]
    fn zero_runs_rejected() {
        let est = Estimator::new(SeedPlan::new(1), 1).unwrap();
        let s = Scenario::flagship();
        let c = ProtocolConfig::new(2, 5, 2, 128.0, 0.1);
        let r = est.run_pair(&s, &EnergyModel::default(), &c, &c, 0, 0, |_| Ok(()));
        assert!(matches!(r, Err(Error::Argument(_))));
    }
}
