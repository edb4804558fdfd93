//! Grid scenarios and randomized workload traces.
//!
//! A [`WorkloadTrace`] is everything random about an episode that does not
//! depend on the protocol: status-report creation times, alarm instants,
//! traffic surges, blackout-recovery intervals and per-node duty-cycle phase
//! offsets. Keeping it separate from the engine lets every profile pair be
//! replayed against identical grid conditions.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::automata::MacTiming;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlackoutSpec {
    /// Poisson arrival rate of blackout-recovery intervals, per hour.
    pub rate_per_hour: f64,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
}

impl Default for BlackoutSpec {
    fn default() -> Self {
        BlackoutSpec {
            rate_per_hour: 0.0,
            min_duration_s: 0.0,
            max_duration_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeSpec {
    /// Probability that a reporting cycle carries a surge.
    pub probability: f64,
    /// Extra status frames every node creates in a surge cycle.
    pub extra_frames: u32,
}

impl Default for SurgeSpec {
    fn default() -> Self {
        SurgeSpec {
            probability: 0.0,
            extra_frames: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n_nodes: usize,
    /// Reporting interval (seconds); also the length of one cycle.
    pub t_rep: f64,
    /// Alarm delivery deadline (seconds).
    pub t_alarm: f64,
    /// Per-cycle energy budget (mJ).
    pub e_max: f64,
    /// Availability threshold.
    pub rho_min: f64,
    pub horizon: f64,
    #[serde(default)]
    pub alarm_rate_per_hour: f64,
    #[serde(default)]
    pub blackout: BlackoutSpec,
    #[serde(default)]
    pub surge: SurgeSpec,
    /// Status frames are created uniformly in `[cycle_start, cycle_start + report_jitter)`.
    #[serde(default)]
    pub report_jitter: f64,
    /// Duty-cycle phase offsets are uniform in `[0, phase_jitter)`.
    #[serde(default)]
    pub phase_jitter: f64,
    /// Independent per-attempt loss probability on otherwise clean frames.
    #[serde(default)]
    pub channel_loss: f64,
    /// Overrides `ceil(rho_min * n_nodes)` as the required responder count.
    #[serde(default)]
    pub n_req: Option<usize>,
    #[serde(default)]
    pub mac: MacTiming,
}

impl Scenario {
    /// Substation scenario: 20 nodes, 45 s reporting, 3 s alarms, 150 mJ, 0.9.
    pub fn flagship() -> Self {
        Scenario {
            n_nodes: 20,
            t_rep: 45.0,
            t_alarm: 3.0,
            e_max: 150.0,
            rho_min: 0.9,
            horizon: 90.0,
            alarm_rate_per_hour: 40.0,
            blackout: BlackoutSpec {
                rate_per_hour: 6.0,
                min_duration_s: 5.0,
                max_duration_s: 20.0,
            },
            surge: SurgeSpec {
                probability: 0.2,
                extra_frames: 2,
            },
            report_jitter: 1.0,
            phase_jitter: 0.005,
            channel_loss: 0.01,
            n_req: None,
            mac: MacTiming::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = |name: &str| format!("scenario.{name}");
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(k(name), format!("must be > 0, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(k(name), format!("must be >= 0, got {v}")))
            }
        };
        if self.n_nodes == 0 {
            return Err(Error::config(k("n_nodes"), "must be >= 1"));
        }
        positive("t_rep", self.t_rep)?;
        positive("t_alarm", self.t_alarm)?;
        positive("e_max", self.e_max)?;
        if self.t_alarm > self.t_rep {
            return Err(Error::config(
                k("t_alarm"),
                format!("must be <= t_rep ({}), got {}", self.t_rep, self.t_alarm),
            ));
        }
        if !(self.rho_min > 0.0 && self.rho_min <= 1.0) {
            return Err(Error::config(
                k("rho_min"),
                format!("must lie in (0, 1], got {}", self.rho_min),
            ));
        }
        if !(self.horizon >= self.t_rep && self.horizon.is_finite()) {
            return Err(Error::config(
                k("horizon"),
                format!("must be >= t_rep ({}), got {}", self.t_rep, self.horizon),
            ));
        }
        non_negative("alarm_rate_per_hour", self.alarm_rate_per_hour)?;
        non_negative("blackout.rate_per_hour", self.blackout.rate_per_hour)?;
        non_negative("blackout.min_duration_s", self.blackout.min_duration_s)?;
        if self.blackout.max_duration_s < self.blackout.min_duration_s {
            return Err(Error::config(
                k("blackout.max_duration_s"),
                "must be >= min_duration_s",
            ));
        }
        if !(0.0..=1.0).contains(&self.surge.probability) {
            return Err(Error::config(k("surge.probability"), "must lie in [0, 1]"));
        }
        non_negative("report_jitter", self.report_jitter)?;
        if self.report_jitter >= self.t_rep {
            return Err(Error::config(
                k("report_jitter"),
                "must be shorter than t_rep",
            ));
        }
        non_negative("phase_jitter", self.phase_jitter)?;
        if !(0.0..1.0).contains(&self.channel_loss) {
            return Err(Error::config(k("channel_loss"), "must lie in [0, 1)"));
        }
        if let Some(n) = self.n_req {
            if n == 0 || n > self.n_nodes {
                return Err(Error::config(
                    k("n_req"),
                    format!("must lie in 1..={}", self.n_nodes),
                ));
            }
        }
        self.mac.validate("scenario.mac")
    }

    /// Number of complete reporting cycles in the horizon.
    pub fn cycles(&self) -> usize {
        (self.horizon / self.t_rep + 1e-9).floor() as usize
    }
}

/// Required number of alarm responders: `ceil(rho_min * N)` unless overridden.
pub fn derive_n_req(scenario: &Scenario) -> usize {
    scenario
        .n_req
        .unwrap_or_else(|| (scenario.rho_min * scenario.n_nodes as f64 - 1e-9).ceil() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadTrace {
    /// Per node, `(creation, deadline)` of the regular status frames.
    pub report_times: Vec<Vec<(f64, f64)>>,
    /// Per node, extra status frames created in surge cycles.
    pub surge_frames: Vec<Vec<(f64, f64)>>,
    pub alarm_times: Vec<f64>,
    pub alarm_deadline: f64,
    pub blackout_intervals: Vec<(f64, f64)>,
    pub surge_cycles: Vec<usize>,
    /// Per node, offset of the first duty-cycle wake window.
    pub phase_offsets: Vec<f64>,
}

impl WorkloadTrace {
    /// Line-delimited, tab-separated dump for inspection.
    pub fn to_lines(&self) -> String {
        let mut s = String::new();
        for (node, offset) in self.phase_offsets.iter().enumerate() {
            let _ = writeln!(s, "phase\t{node}\t{offset:.9}");
        }
        for (node, reports) in self.report_times.iter().enumerate() {
            for (c, d) in reports {
                let _ = writeln!(s, "report\t{node}\t{c:.9}\t{d:.9}");
            }
        }
        for (node, frames) in self.surge_frames.iter().enumerate() {
            for (c, d) in frames {
                let _ = writeln!(s, "surge-frame\t{node}\t{c:.9}\t{d:.9}");
            }
        }
        for a in &self.alarm_times {
            let _ = writeln!(s, "alarm\t{a:.9}\t{:.9}", a + self.alarm_deadline);
        }
        for (b, e) in &self.blackout_intervals {
            let _ = writeln!(s, "blackout\t{b:.9}\t{e:.9}");
        }
        for c in &self.surge_cycles {
            let _ = writeln!(s, "surge\t{c}");
        }
        s
    }
}

fn poisson_arrivals(rng: &mut ChaCha8Rng, rate_per_hour: f64, horizon: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if rate_per_hour <= 0.0 {
        return out;
    }
    let rate = rate_per_hour / 3600.0;
    let mut t = 0.0;
    loop {
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / rate;
        if t >= horizon {
            return out;
        }
        out.push(t);
    }
}

/// Draws a trace; a pure function of `(scenario, seed)`.
pub fn generate_trace(scenario: &Scenario, seed: u64) -> Result<WorkloadTrace> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = scenario.n_nodes;
    let cycles = scenario.cycles();
    let jitter = |rng: &mut ChaCha8Rng, width: f64| -> f64 {
        let u: f64 = rng.random();
        u * width
    };

    let phase_offsets: Vec<f64> = (0..n)
        .map(|_| jitter(&mut rng, scenario.phase_jitter))
        .collect();

    let report_times: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|_| {
            (0..cycles)
                .map(|c| {
                    let created =
                        c as f64 * scenario.t_rep + jitter(&mut rng, scenario.report_jitter);
                    (created, created + scenario.t_rep)
                })
                .collect()
        })
        .collect();

    let alarm_times = poisson_arrivals(&mut rng, scenario.alarm_rate_per_hour, scenario.horizon);

    let mut blackout_intervals: Vec<(f64, f64)> = Vec::new();
    let bo = &scenario.blackout;
    for start in poisson_arrivals(&mut rng, bo.rate_per_hour, scenario.horizon) {
        let u: f64 = rng.random();
        let duration = bo.min_duration_s + u * (bo.max_duration_s - bo.min_duration_s);
        let end = (start + duration).min(scenario.horizon);
        if end <= start {
            continue;
        }
        match blackout_intervals.last_mut() {
            // arrivals are sorted, so only the previous interval can overlap
            Some(last) if start <= last.1 => last.1 = last.1.max(end),
            _ => blackout_intervals.push((start, end)),
        }
    }

    let mut surge_cycles = Vec::new();
    let mut surge_frames = vec![Vec::new(); n];
    for c in 0..cycles {
        let u: f64 = rng.random();
        if u < scenario.surge.probability && scenario.surge.extra_frames > 0 {
            surge_cycles.push(c);
            for frames in surge_frames.iter_mut() {
                for _ in 0..scenario.surge.extra_frames {
                    let created =
                        c as f64 * scenario.t_rep + jitter(&mut rng, scenario.report_jitter);
                    frames.push((created, created + scenario.t_rep));
                }
            }
        }
    }

    Ok(WorkloadTrace {
        report_times,
        surge_frames,
        alarm_times,
        alarm_deadline: scenario.t_alarm,
        blackout_intervals,
        surge_cycles,
        phase_offsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(n_nodes: usize, horizon: f64) -> Scenario {
        Scenario {
            n_nodes,
            horizon,
            alarm_rate_per_hour: 0.0,
            blackout: BlackoutSpec::default(),
            surge: SurgeSpec::default(),
            ..Scenario::flagship()
        }
    }

    #[test]
    fn flagship_values() {
        let s = Scenario::flagship();
        s.validate().unwrap();
        assert_eq!(
            (s.n_nodes, s.t_rep, s.t_alarm, s.e_max, s.rho_min),
            (20, 45.0, 3.0, 150.0, 0.9)
        );
        assert_eq!(derive_n_req(&s), 18);
    }

    #[test]
    fn n_req_ceiling() {
        let mut s = quiet(7, 90.0);
        s.rho_min = 1.0;
        assert_eq!(derive_n_req(&s), 7);
        let mut s = quiet(20, 90.0);
        s.rho_min = 0.85;
        assert_eq!(derive_n_req(&s), 17);
        s.n_req = Some(12);
        assert_eq!(derive_n_req(&s), 12);
    }

    #[test]
    fn zero_alarm_rate_gives_no_alarms() {
        let trace = generate_trace(&quiet(3, 900.0), 4).unwrap();
        assert!(trace.alarm_times.is_empty());
    }

    #[test]
    fn two_cycles_two_reports() {
        let trace = generate_trace(&quiet(5, 90.0), 1).unwrap();
        for node in &trace.report_times {
            assert_eq!(node.len(), 2);
            for (c, d) in node {
                assert_eq!(*d, c + 45.0);
            }
        }
    }

    #[test]
    fn partial_cycle_does_not_add_a_report() {
        let trace = generate_trace(&quiet(2, 100.0), 1).unwrap();
        assert!(trace.report_times.iter().all(|r| r.len() == 2));
    }

    #[test]
    fn alarm_count_has_poisson_mean() {
        let mut s = quiet(1, 3600.0);
        s.alarm_rate_per_hour = 4.0;
        let seeds = 10_000u64;
        let total: usize = (0..seeds)
            .map(|seed| generate_trace(&s, seed).unwrap().alarm_times.len())
            .sum();
        let mean = total as f64 / seeds as f64;
        assert!(
            (mean - 4.0).abs() < 3.0 * (4.0f64 / seeds as f64).sqrt(),
            "mean {mean}"
        );
    }

    #[test]
    fn deterministic_in_seed() {
        let s = Scenario::flagship();
        assert_eq!(
            generate_trace(&s, 42).unwrap(),
            generate_trace(&s, 42).unwrap()
        );
        assert_ne!(
            generate_trace(&s, 42).unwrap(),
            generate_trace(&s, 43).unwrap()
        );
    }

    #[test]
    fn blackouts_are_disjoint_and_inside_horizon() {
        let mut s = Scenario::flagship();
        s.blackout = BlackoutSpec {
            rate_per_hour: 300.0,
            min_duration_s: 5.0,
            max_duration_s: 30.0,
        };
        for seed in 0..200 {
            let trace = generate_trace(&s, seed).unwrap();
            let iv = &trace.blackout_intervals;
            for (b, e) in iv {
                assert!(0.0 <= *b && b < e && *e <= s.horizon);
            }
            for w in iv.windows(2) {
                assert!(w[0].1 < w[1].0, "{iv:?}");
            }
        }
    }

    #[test]
    fn surge_frames_follow_surge_cycles() {
        let mut s = quiet(4, 450.0);
        s.surge = SurgeSpec {
            probability: 0.5,
            extra_frames: 3,
        };
        let trace = generate_trace(&s, 8).unwrap();
        assert!(!trace.surge_cycles.is_empty());
        for frames in &trace.surge_frames {
            assert_eq!(frames.len(), 3 * trace.surge_cycles.len());
        }
    }

    #[test]
    fn scenario_invariants() {
        let mut s = Scenario::flagship();
        s.t_alarm = 50.0;
        assert!(s.validate().unwrap_err().to_string().contains("t_alarm"));
        let mut s = Scenario::flagship();
        s.rho_min = 0.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::flagship();
        s.horizon = 10.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::flagship();
        s.n_nodes = 0;
        assert!(s.validate().is_err());
    }
}
