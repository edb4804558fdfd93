use serde::Serialize;

use super::artifact::Artifact;
use crate::automata::ProtocolConfig;
use crate::error::{Error, Result};
use crate::game::{MetricSummary, StrategyEntry};
use crate::stats::bernoulli_se;

pub const CSV_HEADER: [&str; 14] = [
    "id",
    "be_min",
    "be_max",
    "n_retx",
    "cca_us",
    "duty_pct",
    "utility",
    "utility_se",
    "delivery_pct",
    "delivery_se",
    "energy_mj",
    "energy_se",
    "budget_ok",
    "delta_grid",
];

/// One line of the parameterization table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub id: String,
    pub be_min: u8,
    pub be_max: u8,
    pub n_retx: u32,
    pub cca_us: f64,
    pub duty_pct: f64,
    pub utility: f64,
    pub utility_se: f64,
    pub delivery_pct: f64,
    pub delivery_se: Option<f64>,
    pub energy_mj: f64,
    pub energy_se: Option<f64>,
    pub budget_ok: bool,
    pub delta_grid: Option<f64>,
}

fn row(
    entry: &StrategyEntry,
    k: (u64, u64),
    metrics: &MetricSummary,
    e_max: f64,
    delta: Option<f64>,
) -> ReportRow {
    let ProtocolConfig {
        be_min,
        be_max,
        n_retx,
        cca_us,
        duty_cycle,
        ..
    } = entry.config;
    let utility = k.0 as f64 / k.1 as f64;
    ReportRow {
        id: entry.id.clone(),
        be_min,
        be_max,
        n_retx,
        cca_us,
        duty_pct: (duty_cycle * 100.0 * 1e6).round() / 1e6,
        utility,
        utility_se: bernoulli_se(utility, k.1),
        delivery_pct: metrics.delivery_mean * 100.0,
        delivery_se: metrics.delivery_se.map(|s| s * 100.0),
        energy_mj: metrics.energy_mean_mj,
        energy_se: metrics.energy_se_mj,
        budget_ok: metrics.energy_mean_mj <= e_max,
        delta_grid: delta,
    }
}

/// Table rows from persisted artifacts. Screening contributes one row per
/// config; a certification replaces its candidate's row and fills `delta_grid`.
pub fn build_rows(artifacts: &[Artifact]) -> Result<Vec<ReportRow>> {
    let Some(first) = artifacts.first() else {
        return Err(Error::Argument("report needs at least one artifact".into()));
    };
    if let Some(other) = artifacts
        .iter()
        .find(|a| a.fingerprint() != first.fingerprint())
    {
        return Err(Error::Argument(format!(
            "artifacts come from different scenarios ({} vs {})",
            first.fingerprint(),
            other.fingerprint()
        )));
    }
    let mut rows: Vec<ReportRow> = Vec::new();
    let upsert =
        |r: ReportRow, rows: &mut Vec<ReportRow>| match rows.iter_mut().find(|x| x.id == r.id) {
            Some(slot) => *slot = r,
            None => rows.push(r),
        };
    for a in artifacts
        .iter()
        .filter(|a| matches!(a, Artifact::Screening(_)))
    {
        let Artifact::Screening(s) = a else {
            unreachable!()
        };
        for sp in &s.self_play {
            let entry = s
                .strategy_space
                .iter()
                .find(|e| e.id == sp.id)
                .ok_or_else(|| {
                    Error::Artifact(format!("self-play row `{}` not in strategy space", sp.id))
                })?;
            let k = (sp.utility.successes, sp.utility.trials);
            upsert(
                row(entry, k, &sp.metrics, s.scenario.e_max, None),
                &mut rows,
            );
        }
    }
    for a in artifacts {
        if let Artifact::Certification(c) = a {
            let r = &c.report;
            let entry = c
                .strategy_space
                .iter()
                .find(|e| e.id == r.candidate)
                .ok_or_else(|| {
                    Error::Artifact(format!("candidate `{}` not in strategy space", r.candidate))
                })?;
            let cert_row = row(
                entry,
                (r.self_successes, r.m_cert),
                &c.self_play,
                c.scenario.e_max,
                r.delta_grid,
            );
            upsert(cert_row, &mut rows);
        }
    }
    // keep the strategy-space order
    let order: Vec<String> = match first {
        Artifact::Screening(s) => s.strategy_space.iter().map(|e| e.id.clone()).collect(),
        Artifact::Certification(c) => c.strategy_space.iter().map(|e| e.id.clone()).collect(),
    };
    rows.sort_by_key(|r| {
        order
            .iter()
            .position(|id| *id == r.id)
            .unwrap_or(usize::MAX)
    });
    Ok(rows)
}

fn fixed(v: Option<f64>, decimals: usize) -> String {
    v.map(|x| format!("{x:.decimals$}")).unwrap_or_default()
}

/// CSV with a fixed header and fixed decimals (utility 3, delivery 1, energy 1, Δ 3).
pub fn render_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Internal(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.id.clone(),
            r.be_min.to_string(),
            r.be_max.to_string(),
            r.n_retx.to_string(),
            r.cca_us.to_string(),
            r.duty_pct.to_string(),
            fixed(Some(r.utility), 3),
            fixed(Some(r.utility_se), 3),
            fixed(Some(r.delivery_pct), 1),
            fixed(r.delivery_se, 1),
            fixed(Some(r.energy_mj), 1),
            fixed(r.energy_se, 1),
            if r.budget_ok { "yes" } else { "no" }.to_string(),
            fixed(r.delta_grid, 3),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Internal(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(format!("csv: {e}")))
}

pub fn render_json(rows: &[ReportRow]) -> Result<String> {
    let mut s =
        serde_json::to_string_pretty(rows).map_err(|e| Error::Internal(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(delivery: f64, energy: f64) -> MetricSummary {
        MetricSummary {
            runs: 1000,
            delivery_mean: delivery,
            delivery_se: Some(0.0021),
            energy_mean_mj: energy,
            energy_se_mj: Some(0.26),
            alarm_latency_mean: Some(0.09),
            alarm_latency_se: Some(0.001),
        }
    }

    fn entry(id: &str, cfg: ProtocolConfig) -> StrategyEntry {
        StrategyEntry {
            id: id.into(),
            config: cfg,
            admissible: true,
        }
    }

    #[test]
    fn golden_rows() {
        let b = entry("B", ProtocolConfig::new(2, 5, 2, 128.0, 0.09));
        let f = entry("F", ProtocolConfig::new(2, 6, 4, 192.0, 0.12));
        let rows = [
            row(
                &b,
                (91_400, 100_000),
                &summary(0.9612, 131.24),
                150.0,
                Some(0.96349),
            ),
            row(&f, (8_150, 10_000), &summary(0.90149, 152.8), 150.0, None),
        ];
        let expected = "\
id,be_min,be_max,n_retx,cca_us,duty_pct,utility,utility_se,delivery_pct,delivery_se,energy_mj,energy_se,budget_ok,delta_grid
B,2,5,2,128,9,0.914,0.001,96.1,0.2,131.2,0.3,yes,0.963
F,2,6,4,192,12,0.815,0.004,90.1,0.2,152.8,0.3,no,
";
        assert_eq!(render_csv(&rows).unwrap(), expected);
    }

    #[test]
    fn budget_is_inclusive() {
        let a = entry("A", ProtocolConfig::new(2, 4, 2, 128.0, 0.08));
        assert!(row(&a, (1, 2), &summary(0.5, 150.0), 150.0, None).budget_ok);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(build_rows(&[]).is_err());
    }
}
