use serde::Serialize;

use super::channel::TxOutcome;
use crate::automata::FrameKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameOutcome {
    pub kind: FrameKind,
    pub alarm_id: Option<u32>,
    pub created: f64,
    pub deadline: f64,
    pub delivered: Option<f64>,
    /// `delivered - created`, computed on the integer clock.
    pub latency: Option<f64>,
    /// Cumulative node energy when the ACK arrived.
    pub energy_at_delivery_mj: Option<f64>,
    pub dropped: bool,
    pub attempts: u32,
}

impl FrameOutcome {
    pub fn delivered_by_deadline(&self) -> bool {
        self.delivered.is_some_and(|d| d <= self.deadline)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeOutcome {
    pub frames: Vec<FrameOutcome>,
    pub drops: u32,
    pub energy_mj: f64,
    pub retransmissions: u32,
    pub awake_fraction_during_blackout_recovery: f64,
    /// Cumulative energy at every cycle boundary `c * t_rep`, `c = 0..=cycles`.
    pub cycle_start_energy_mj: Vec<f64>,
    /// Dwell time per location, indexed by [`crate::automata::Location::index`].
    pub state_time_ns: [u64; 6],
    pub pending_at_horizon: u32,
}

impl NodeOutcome {
    pub fn status_deliveries(&self) -> Vec<(f64, f64)> {
        self.deliveries(FrameKind::Status)
    }

    pub fn alarm_deliveries(&self) -> Vec<(f64, f64)> {
        self.deliveries(FrameKind::Alarm)
    }

    fn deliveries(&self, kind: FrameKind) -> Vec<(f64, f64)> {
        self.frames
            .iter()
            .filter(|f| f.kind == kind)
            .filter_map(|f| f.delivered.map(|d| (f.created, d)))
            .collect()
    }

    /// Status frames delivered by their deadline, over status frames whose
    /// fate is known by `horizon` (delivered, dropped, or deadline passed).
    pub fn status_delivery_counts(&self, horizon: f64) -> (u32, u32) {
        let mut ok = 0;
        let mut total = 0;
        for f in self.frames.iter().filter(|f| f.kind == FrameKind::Status) {
            if f.delivered.is_some() || f.dropped || f.deadline <= horizon {
                total += 1;
                if f.delivered_by_deadline() {
                    ok += 1;
                }
            }
        }
        (ok, total)
    }

    pub fn cycle_energy_mj(&self, cycle: usize) -> f64 {
        self.cycle_start_energy_mj[cycle + 1] - self.cycle_start_energy_mj[cycle]
    }

    /// Mean energy over the complete cycles of the run.
    pub fn mean_cycle_energy_mj(&self) -> f64 {
        let cycles = self.cycle_start_energy_mj.len().saturating_sub(1);
        if cycles == 0 {
            return 0.0;
        }
        (self.cycle_start_energy_mj[cycles] - self.cycle_start_energy_mj[0]) / cycles as f64
    }

    pub fn alarm_latencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.frames
            .iter()
            .filter(|f| f.kind == FrameKind::Alarm)
            .filter_map(|f| f.latency)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlarmEvent {
    pub alarm_id: u32,
    pub time: f64,
    pub deadline: f64,
    /// Per node, latency of that node's alarm frame if it was delivered.
    pub responder_latencies: Vec<Option<f64>>,
    pub responders_within_deadline: u32,
}

impl AlarmEvent {
    pub fn responders_within(&self, bound: f64) -> usize {
        self.responder_latencies
            .iter()
            .filter(|l| l.is_some_and(|l| l <= bound))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct NetworkOutcome {
    pub alarm_events: Vec<AlarmEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TxRecord {
    pub node: usize,
    pub start: f64,
    pub end: f64,
    pub outcome: TxOutcome,
}

/// Everything observable about one episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub horizon: f64,
    pub cycle_len: f64,
    pub cycles: usize,
    pub per_node: Vec<NodeOutcome>,
    pub network: NetworkOutcome,
    pub transmissions: Vec<TxRecord>,
}
