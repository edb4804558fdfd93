use serde::{Deserialize, Serialize};

use super::space::StrategySpace;
use crate::error::{Error, Result};
use crate::stats::UtilityEstimate;

/// Source of utility estimates `U(deviant, field)`; indices refer to the
/// admissible entries of a [`StrategySpace`].
pub trait UtilityOracle {
    fn estimate(
        &mut self,
        deviant: usize,
        field: usize,
        m: u64,
        pair_index: u64,
    ) -> Result<UtilityEstimate>;
}

/// Exactly known utilities, for replaying screening decisions.
#[derive(Debug, Clone)]
pub struct FrozenMatrix {
    ids: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl FrozenMatrix {
    /// `values[deviant][field]`, each in `[0, 1]`.
    pub fn new(ids: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(Error::Argument(format!("frozen matrix must be {n} x {n}")));
        }
        if values.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Argument(
                "frozen utilities must lie in [0, 1]".into(),
            ));
        }
        Ok(FrozenMatrix { ids, values })
    }

    pub fn value(&self, deviant: usize, field: usize) -> f64 {
        self.values[deviant][field]
    }
}

impl UtilityOracle for FrozenMatrix {
    fn estimate(
        &mut self,
        deviant: usize,
        field: usize,
        m: u64,
        pair_index: u64,
    ) -> Result<UtilityEstimate> {
        let p = self.values[deviant][field];
        let pair = (self.ids[deviant].clone(), self.ids[field].clone());
        let mut e = UtilityEstimate::from_counts(0, 1, 0.05, pair, pair_index, "frozen".into())?;
        // exact value; the count is nominal
        e.trials = m;
        e.successes = (p * m as f64).round() as u64;
        e.p_hat = p;
        e.se = 0.0;
        e.ci_low = p;
        e.ci_high = p;
        Ok(e)
    }
}

/// Every estimate gathered so far, in the order it was made.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UtilityMatrix {
    pub entries: Vec<UtilityEstimate>,
}

impl UtilityMatrix {
    pub fn get(&self, deviant: &str, field: &str) -> Option<&UtilityEstimate> {
        self.entries
            .iter()
            .find(|e| e.profile_pair.0 == deviant && e.profile_pair.1 == field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elimination {
    pub eliminated: String,
    pub witness: String,
    pub self_utility: f64,
    pub cross_utility: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResult {
    pub selected: String,
    /// Columns that survived full exploration, in the order they were finalized.
    pub survivors: Vec<String>,
    pub eliminations: Vec<Elimination>,
    /// Minimum `U(t, t) / U(t', t)` over deviations, per survivor; `None` is unbounded.
    pub min_ratios: Vec<(String, Option<f64>)>,
    pub lambda: f64,
    pub total_runs: u64,
    pub matrix: UtilityMatrix,
}

/// Bookkeeping of a screening pass.
#[derive(Debug, Clone)]
pub struct ScreenState {
    pub diag: Vec<f64>,
    pub remain: Vec<bool>,
    /// `explored[deviant][field]`.
    pub explored: Vec<Vec<bool>>,
}

/// Next unexplored `(deviant, field)` pair: weakest remaining column first,
/// strongest challenger first, ties broken by id.
pub fn pair_order(space: &StrategySpace, state: &ScreenState) -> Option<(usize, usize)> {
    let ids = space.ids();
    let n = ids.len();
    let mut fields: Vec<usize> = (0..n).filter(|&f| state.remain[f]).collect();
    fields.sort_by(|&a, &b| {
        state.diag[a]
            .total_cmp(&state.diag[b])
            .then(ids[a].cmp(ids[b]))
    });
    let mut deviants: Vec<usize> = (0..n).collect();
    deviants.sort_by(|&a, &b| {
        state.diag[b]
            .total_cmp(&state.diag[a])
            .then(ids[a].cmp(ids[b]))
    });
    fields.into_iter().find_map(|f| {
        deviants
            .iter()
            .find(|&&d| !state.explored[d][f])
            .map(|&d| (d, f))
    })
}

/// `U(t, t) / U(t', t)`, unbounded when the challenger never succeeds.
pub fn dominance_ratio(self_utility: f64, cross_utility: f64) -> Option<f64> {
    (cross_utility > 0.0).then(|| self_utility / cross_utility)
}

fn ratio_key(r: Option<f64>) -> f64 {
    r.unwrap_or(f64::INFINITY)
}

/// Screening pair index for `(deviant, field)`.
pub fn screening_pair_index(n: usize, deviant: usize, field: usize) -> u64 {
    (deviant * n + field) as u64
}

/// Dominance-ratio screening of a strategy space.
///
/// Self-play utilities are estimated first with `m_base` runs each. Then
/// cross pairs are explored with `m_step` runs: a column `t` is eliminated
/// as soon as some `t'` gives `U(t, t) < lambda * U(t', t)`, and a column
/// whose every deviation has been explored is finalized. The loop drains
/// the remaining set, so each config is either eliminated or finalized.
/// The finalized config maximizing its minimum dominance ratio is selected.
pub fn screen(
    space: &StrategySpace,
    oracle: &mut dyn UtilityOracle,
    lambda: f64,
    m_base: u64,
    m_step: u64,
) -> Result<ScreeningResult> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Argument(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )));
    }
    if m_base == 0 || m_step == 0 {
        return Err(Error::Argument("screening run counts must be >= 1".into()));
    }
    let ids = space.ids();
    let n = ids.len();
    let mut matrix = UtilityMatrix::default();
    let mut total_runs = 0;
    let mut util = vec![vec![f64::NAN; n]; n];
    let mut state = ScreenState {
        diag: vec![0.0; n],
        remain: vec![true; n],
        explored: vec![vec![false; n]; n],
    };

    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        let e = oracle.estimate(i, i, m_base, screening_pair_index(n, i, i))?;
        total_runs += e.trials;
        state.diag[i] = e.p_hat;
        util[i][i] = e.p_hat;
        state.explored[i][i] = true;
        matrix.entries.push(e);
    }

    let mut survivors = Vec::new();
    let mut eliminations = Vec::new();
    loop {
        for f in 0..n {
            if state.remain[f] && (0..n).all(|d| state.explored[d][f]) {
                state.remain[f] = false;
                survivors.push(f);
            }
        }
        let Some((d, f)) = pair_order(space, &state) else {
            break;
        };
        let e = oracle.estimate(d, f, m_step, screening_pair_index(n, d, f))?;
        total_runs += e.trials;
        util[d][f] = e.p_hat;
        state.explored[d][f] = true;
        if state.diag[f] < lambda * e.p_hat {
            state.remain[f] = false;
            eliminations.push(Elimination {
                eliminated: ids[f].to_string(),
                witness: ids[d].to_string(),
                self_utility: state.diag[f],
                cross_utility: e.p_hat,
                lambda,
            });
        }
        matrix.entries.push(e);
    }

    if survivors.is_empty() {
        let chain: Vec<String> = eliminations
            .iter()
            .map(|e| {
                format!(
                    "{} by {} ({} < {} x {})",
                    e.eliminated, e.witness, e.self_utility, e.lambda, e.cross_utility
                )
            })
            .collect();
        return Err(Error::Screening(format!(
            "every candidate was eliminated: {}",
            chain.join("; ")
        )));
    }

    let min_ratio = |f: usize| -> Option<f64> {
        (0..n)
            .filter(|&d| d != f)
            .map(|d| dominance_ratio(util[f][f], util[d][f]))
            .min_by(|a, b| ratio_key(*a).total_cmp(&ratio_key(*b)))
            .flatten()
    };
    let mut best: Option<(usize, f64)> = None;
    let mut order = survivors.clone();
    order.sort_unstable();
    for &f in &order {
        let r = ratio_key(min_ratio(f));
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((f, r));
        }
    }
    let selected = best.map(|(f, _)| f).unwrap_or(survivors[0]);

    Ok(ScreeningResult {
        selected: ids[selected].to_string(),
        min_ratios: survivors
            .iter()
            .map(|&f| (ids[f].to_string(), min_ratio(f)))
            .collect(),
        survivors: survivors.iter().map(|&f| ids[f].to_string()).collect(),
        eliminations,
        lambda,
        total_runs,
        matrix,
    })
}

/// Config with the highest self-play utility; ties go to the earlier entry.
pub fn symmetric_optimum(space: &StrategySpace, matrix: &UtilityMatrix) -> Result<String> {
    let mut best: Option<(&str, f64)> = None;
    for id in space.ids() {
        let e = matrix
            .get(id, id)
            .ok_or_else(|| Error::Argument(format!("no self-play estimate for `{id}`")))?;
        if best.is_none_or(|(_, b)| e.p_hat > b) {
            best = Some((id, e.p_hat));
        }
    }
    Ok(best.map(|(id, _)| id.to_string()).unwrap_or_default())
}
