use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::channel::{ChannelSense, ChannelState, Transmission, TxOutcome};
use super::outcome::{AlarmEvent, FrameOutcome, NetworkOutcome, NodeOutcome, RunOutcome, TxRecord};
use super::queue::{
    EventQueue, MEDIUM, PRIORITY_END, PRIORITY_MEDIUM, PRIORITY_TIMER, PRIORITY_WORKLOAD,
};
use crate::automata::{
    EnergyModel, Frame, FrameKind, MediumAction, NodeAutomaton, NodeEvent, ProtocolConfig,
};
use crate::error::{Error, Result};
use crate::time::SimTime;
use crate::workload::{Scenario, WorkloadTrace};

/// One line of the optional per-episode debug dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: Option<usize>,
    pub what: String,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(n) => write!(f, "{:.9}\t{}\t{}", self.time.as_secs(), n, self.what),
            None => write!(f, "{:.9}\tmedium\t{}", self.time.as_secs(), self.what),
        }
    }
}

#[derive(Debug, Clone)]
enum Payload {
    Node(NodeEvent),
    CcaComplete { start: SimTime, duration: SimTime },
    TxEnd(Transmission),
    Ack { received: bool },
    DutyWake,
    DutySleep,
    Alarm(u32),
    RecoveryStart,
    RecoveryEnd,
    CycleBoundary(usize),
    End,
}

struct Engine<'a> {
    nodes: Vec<NodeAutomaton>,
    channel: ChannelState,
    queue: EventQueue<Payload>,
    rng: ChaCha8Rng,
    now: SimTime,
    actions: Vec<MediumAction>,
    /// Awake window per node; `None` means the radio never sleeps on schedule.
    wake_len: Vec<Option<SimTime>>,
    period: SimTime,
    ack_turnaround: SimTime,
    ack_wait: SimTime,
    t_alarm: SimTime,
    channel_loss: f64,
    retention: SimTime,
    alarms: Vec<SimTime>,
    cycle_energy: Vec<Vec<f64>>,
    tx_log: Vec<TxRecord>,
    trace: Option<&'a mut Vec<TraceRecord>>,
}

/// Runs one episode of `scenario` with node `i` playing `assignment[i]`.
pub fn run_episode(
    scenario: &Scenario,
    energy: &EnergyModel,
    assignment: &[ProtocolConfig],
    trace: &WorkloadTrace,
    seed: u64,
) -> Result<RunOutcome> {
    Engine::build(scenario, energy, assignment, trace, seed, None)?.run(scenario)
}

/// Same as [`run_episode`], also appending every location change and
/// medium action to `sink`.
pub fn run_episode_traced(
    scenario: &Scenario,
    energy: &EnergyModel,
    assignment: &[ProtocolConfig],
    trace: &WorkloadTrace,
    seed: u64,
    sink: &mut Vec<TraceRecord>,
) -> Result<RunOutcome> {
    Engine::build(scenario, energy, assignment, trace, seed, Some(sink))?.run(scenario)
}

impl<'a> Engine<'a> {
    fn build(
        scenario: &Scenario,
        energy: &EnergyModel,
        assignment: &[ProtocolConfig],
        trace: &WorkloadTrace,
        seed: u64,
        sink: Option<&'a mut Vec<TraceRecord>>,
    ) -> Result<Self> {
        scenario.validate()?;
        let n = scenario.n_nodes;
        if assignment.len() != n {
            return Err(Error::Argument(format!(
                "assignment has {} profiles for {n} nodes",
                assignment.len()
            )));
        }
        if trace.report_times.len() != n
            || trace.phase_offsets.len() != n
            || trace.surge_frames.len() != n
        {
            return Err(Error::Argument(
                "workload trace was generated for a different node count".into(),
            ));
        }
        let mac = &scenario.mac;
        let nodes = assignment
            .iter()
            .enumerate()
            .map(|(i, cfg)| {
                cfg.validate(&format!("assignment[{i}]"))?;
                NodeAutomaton::new(*cfg, *energy, mac, i)
            })
            .collect::<Result<Vec<_>>>()?;
        let period = SimTime::from_secs(mac.duty_period_s);
        let wake_len = assignment
            .iter()
            .map(|c| {
                (c.duty_cycle < 1.0)
                    .then(|| SimTime((period.nanos() as f64 * c.duty_cycle).round() as u64))
            })
            .collect();
        let max_cca = assignment
            .iter()
            .map(|c| c.cca_duration())
            .max()
            .unwrap_or_default();
        let retention = SimTime::from_micros(mac.airtime_us) + max_cca + SimTime::from_micros(1.0);

        let mut engine = Engine {
            nodes,
            channel: ChannelState::new(),
            queue: EventQueue::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            now: SimTime::ZERO,
            actions: Vec::with_capacity(4),
            wake_len,
            period,
            ack_turnaround: SimTime::from_micros(mac.ack_turnaround_us),
            ack_wait: SimTime::from_micros(mac.ack_wait_us),
            t_alarm: SimTime::from_secs(scenario.t_alarm),
            channel_loss: scenario.channel_loss,
            retention,
            alarms: Vec::new(),
            cycle_energy: vec![Vec::new(); n],
            tx_log: Vec::new(),
            trace: sink,
        };
        engine.seed_events(scenario, trace);
        Ok(engine)
    }

    fn seed_events(&mut self, scenario: &Scenario, trace: &WorkloadTrace) {
        let horizon = SimTime::from_secs(scenario.horizon);
        let q = &mut self.queue;
        for (i, phase) in trace.phase_offsets.iter().enumerate() {
            q.schedule(
                SimTime::from_secs(*phase),
                PRIORITY_TIMER,
                i as u32,
                Payload::DutyWake,
            );
        }
        for (i, (reports, surges)) in trace
            .report_times
            .iter()
            .zip(&trace.surge_frames)
            .enumerate()
        {
            for (created, deadline) in reports.iter().chain(surges) {
                let frame =
                    Frame::status(SimTime::from_secs(*created), SimTime::from_secs(*deadline));
                q.schedule(
                    frame.created,
                    PRIORITY_WORKLOAD,
                    i as u32,
                    Payload::Node(NodeEvent::FrameArrival(frame)),
                );
            }
        }
        for (j, t) in trace.alarm_times.iter().enumerate() {
            let at = SimTime::from_secs(*t);
            self.alarms.push(at);
            q.schedule(at, PRIORITY_WORKLOAD, MEDIUM, Payload::Alarm(j as u32));
        }
        for (b, e) in &trace.blackout_intervals {
            q.schedule(
                SimTime::from_secs(*b),
                PRIORITY_WORKLOAD,
                MEDIUM,
                Payload::RecoveryStart,
            );
            q.schedule(
                SimTime::from_secs(*e),
                PRIORITY_WORKLOAD,
                MEDIUM,
                Payload::RecoveryEnd,
            );
        }
        for c in 0..=scenario.cycles() {
            let at = SimTime::from_secs(c as f64 * scenario.t_rep).min(horizon);
            q.schedule(at, PRIORITY_WORKLOAD, MEDIUM, Payload::CycleBoundary(c));
        }
        q.schedule(horizon, PRIORITY_END, MEDIUM, Payload::End);
    }

    fn log(&mut self, node: Option<usize>, what: impl FnOnce() -> String) {
        if let Some(sink) = self.trace.as_mut() {
            sink.push(TraceRecord {
                time: self.now,
                node,
                what: what(),
            });
        }
    }

    fn run(mut self, scenario: &Scenario) -> Result<RunOutcome> {
        let mut ended = false;
        while let Some(ev) = self.queue.next_event() {
            if ev.time < self.now {
                return Err(Error::Internal(format!(
                    "non-monotonic event pop: {} after {}",
                    ev.time, self.now
                )));
            }
            self.now = ev.time;
            let node = ev.node as usize;
            match ev.payload {
                Payload::End => {
                    ended = true;
                    break;
                }
                Payload::Node(event) => self.dispatch(node, event)?,
                Payload::CcaComplete { start, duration } => {
                    let sense = self.channel.cca_sample(start, duration);
                    self.log(Some(node), || format!("cca {sense:?}"));
                    let event = match sense {
                        ChannelSense::Busy => NodeEvent::ChannelBusy,
                        ChannelSense::Idle => NodeEvent::ChannelIdle,
                    };
                    self.dispatch(node, event)?;
                }
                Payload::TxEnd(tx) => self.end_transmission(node, tx)?,
                Payload::Ack { received } => {
                    let event = if received {
                        NodeEvent::AckReceived
                    } else {
                        NodeEvent::AckTimeout
                    };
                    self.dispatch(node, event)?;
                }
                Payload::DutyWake => {
                    self.dispatch(node, NodeEvent::DutyWake)?;
                    if let Some(len) = self.wake_len[node] {
                        self.queue.schedule(
                            self.now + len,
                            PRIORITY_TIMER,
                            node as u32,
                            Payload::DutySleep,
                        );
                        self.queue.schedule(
                            self.now + self.period,
                            PRIORITY_TIMER,
                            node as u32,
                            Payload::DutyWake,
                        );
                    }
                }
                Payload::DutySleep => self.dispatch(node, NodeEvent::DutySleep)?,
                Payload::Alarm(id) => {
                    self.log(None, || format!("grid alarm {id}"));
                    let frame = Frame::alarm(id, self.now, self.now + self.t_alarm);
                    for i in 0..self.nodes.len() {
                        self.dispatch(i, NodeEvent::GridAlarmBroadcast(frame))?;
                    }
                }
                Payload::RecoveryStart | Payload::RecoveryEnd => {
                    let start = matches!(ev.payload, Payload::RecoveryStart);
                    self.log(None, || {
                        if start {
                            "recovery start".into()
                        } else {
                            "recovery end".into()
                        }
                    });
                    for i in 0..self.nodes.len() {
                        let event = if start {
                            NodeEvent::RecoveryStart
                        } else {
                            NodeEvent::RecoveryEnd
                        };
                        self.dispatch(i, event)?;
                    }
                }
                Payload::CycleBoundary(c) => {
                    for (node, energy) in self.nodes.iter_mut().zip(self.cycle_energy.iter_mut()) {
                        node.accrue_energy(self.now)?;
                        debug_assert_eq!(energy.len(), c);
                        energy.push(node.energy_mj());
                    }
                }
            }
        }
        if !ended {
            return Err(Error::Internal(
                "event queue drained before the horizon".into(),
            ));
        }
        for node in &mut self.nodes {
            node.accrue_energy(self.now)?;
        }
        Ok(self.finish(scenario))
    }

    fn end_transmission(&mut self, node: usize, tx: Transmission) -> Result<()> {
        let outcome = self.channel.arbitrate(&tx)?;
        self.tx_log.push(TxRecord {
            node,
            start: tx.start.as_secs(),
            end: tx.end.as_secs(),
            outcome,
        });
        self.dispatch(node, NodeEvent::TxAirtimeComplete)?;
        let u: f64 = self.rng.random();
        let received = outcome == TxOutcome::Delivered && u >= self.channel_loss;
        self.log(Some(node), || format!("tx end {outcome:?} ack={received}"));
        let delay = if received {
            self.ack_turnaround
        } else {
            self.ack_wait
        };
        self.queue.schedule(
            self.now + delay,
            PRIORITY_MEDIUM,
            node as u32,
            Payload::Ack { received },
        );
        self.channel.prune(self.now.saturating_sub(self.retention));
        Ok(())
    }

    fn dispatch(&mut self, node: usize, event: NodeEvent) -> Result<()> {
        let mut actions = std::mem::take(&mut self.actions);
        actions.clear();
        let before = self.nodes[node].location();
        let name = event.name();
        self.nodes[node].handle_event(event, self.now, &mut self.rng, &mut actions)?;
        let after = self.nodes[node].location();
        if before != after {
            self.log(Some(node), || format!("{name}: {before} -> {after}"));
        }
        for action in actions.drain(..) {
            match action {
                MediumAction::StartTimer { timer, at, token } => {
                    self.queue.schedule(
                        at,
                        PRIORITY_TIMER,
                        node as u32,
                        Payload::Node(NodeEvent::TimerFire { timer, token }),
                    );
                }
                MediumAction::CcaRequest { duration } => {
                    self.log(Some(node), || "cca start".into());
                    let start = self.now;
                    self.queue.schedule(
                        start + duration,
                        PRIORITY_MEDIUM,
                        node as u32,
                        Payload::CcaComplete { start, duration },
                    );
                }
                MediumAction::TxStart { airtime } => {
                    let tx = self.channel.register(node, self.now, self.now + airtime);
                    self.log(Some(node), || format!("tx start #{}", tx.id));
                    self.queue
                        .schedule(tx.end, PRIORITY_MEDIUM, node as u32, Payload::TxEnd(tx));
                }
            }
        }
        self.actions = actions;
        Ok(())
    }

    fn finish(self, scenario: &Scenario) -> RunOutcome {
        let n = self.nodes.len();
        let mut alarm_events: Vec<AlarmEvent> = self
            .alarms
            .iter()
            .enumerate()
            .map(|(j, t)| AlarmEvent {
                alarm_id: j as u32,
                time: t.as_secs(),
                deadline: (*t + self.t_alarm).as_secs(),
                responder_latencies: vec![None; n],
                responders_within_deadline: 0,
            })
            .collect();

        let per_node = self
            .nodes
            .iter()
            .zip(self.cycle_energy)
            .map(|(node, cycle_start_energy_mj)| {
                let frames: Vec<FrameOutcome> = node
                    .records()
                    .iter()
                    .map(|r| FrameOutcome {
                        kind: r.frame.kind,
                        alarm_id: r.frame.alarm_id,
                        created: r.frame.created.as_secs(),
                        deadline: r.frame.deadline.as_secs(),
                        delivered: r.delivered.map(SimTime::as_secs),
                        latency: r.delivered.map(|d| (d - r.frame.created).as_secs()),
                        energy_at_delivery_mj: r.energy_at_delivery_mj,
                        dropped: r.dropped.is_some(),
                        attempts: r.attempts,
                    })
                    .collect();
                for f in frames.iter().filter(|f| f.kind == FrameKind::Alarm) {
                    if let (Some(id), Some(lat)) = (f.alarm_id, f.latency) {
                        alarm_events[id as usize].responder_latencies[node.node_id()] = Some(lat);
                    }
                }
                NodeOutcome {
                    drops: frames.iter().filter(|f| f.dropped).count() as u32,
                    frames,
                    energy_mj: node.energy_mj(),
                    retransmissions: node.retransmissions(),
                    awake_fraction_during_blackout_recovery: node
                        .recovery_availability()
                        .unwrap_or(1.0),
                    cycle_start_energy_mj,
                    state_time_ns: node.state_times_ns(),
                    pending_at_horizon: node.pending_frames() as u32,
                }
            })
            .collect();

        for ev in &mut alarm_events {
            ev.responders_within_deadline = ev.responders_within(scenario.t_alarm) as u32;
        }

        RunOutcome {
            horizon: self.now.as_secs(),
            cycle_len: scenario.t_rep,
            cycles: scenario.cycles(),
            per_node,
            network: NetworkOutcome { alarm_events },
            transmissions: self.tx_log,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::Location;
    use crate::workload::{generate_trace, BlackoutSpec, SurgeSpec};

    fn lone_scenario() -> Scenario {
        Scenario {
            n_nodes: 1,
            horizon: 45.0,
            alarm_rate_per_hour: 0.0,
            blackout: BlackoutSpec::default(),
            surge: SurgeSpec::default(),
            report_jitter: 0.0,
            phase_jitter: 0.0,
            channel_loss: 0.0,
            ..Scenario::flagship()
        }
    }

    fn one_frame_trace(n: usize) -> WorkloadTrace {
        WorkloadTrace {
            report_times: vec![vec![(0.0, 45.0)]; n],
            surge_frames: vec![Vec::new(); n],
            alarm_times: Vec::new(),
            alarm_deadline: 3.0,
            blackout_intervals: Vec::new(),
            surge_cycles: Vec::new(),
            phase_offsets: vec![0.0; n],
        }
    }

    #[test]
    fn single_node_latency_is_closed_form() {
        let scenario = lone_scenario();
        let cfg = ProtocolConfig::new(3, 5, 2, 128.0, 1.0);
        let trace = one_frame_trace(1);
        for seed in 0..20 {
            let mut sink = Vec::new();
            let out = run_episode_traced(
                &scenario,
                &EnergyModel::default(),
                &[cfg],
                &trace,
                seed,
                &mut sink,
            )
            .unwrap();
            let node = &out.per_node[0];
            assert_eq!(node.status_deliveries().len(), 1);
            let latency = node.frames[0].latency.unwrap();
            // recover the drawn backoff from the time CCA started
            let cca_start = sink.iter().find(|r| r.what == "cca start").unwrap().time;
            let backoff = cca_start.as_secs();
            let slots = backoff / 320e-6;
            assert!((slots - slots.round()).abs() < 1e-6 && slots.round() < 8.0);
            let expected = backoff + 128e-6 + 192e-6 + 4256e-6 + 192e-6;
            assert!((latency - expected).abs() < 1e-9, "{latency} vs {expected}");
        }
    }

    #[test]
    fn forced_overlap_collides() {
        let mut scenario = lone_scenario();
        scenario.n_nodes = 2;
        let cfg = ProtocolConfig::new(0, 0, 0, 128.0, 1.0);
        let out = run_episode(
            &scenario,
            &EnergyModel::default(),
            &[cfg, cfg],
            &one_frame_trace(2),
            1,
        )
        .unwrap();
        assert_eq!(out.transmissions.len(), 2);
        assert!(out
            .transmissions
            .iter()
            .all(|t| t.outcome == TxOutcome::Collided));
        // no retries left, so both frames are dropped
        assert!(out.per_node.iter().all(|n| n.drops == 1));
    }

    #[test]
    fn identical_inputs_identical_outcomes() {
        let scenario = Scenario::flagship();
        let trace = generate_trace(&scenario, 3).unwrap();
        let assignment = vec![ProtocolConfig::new(2, 5, 2, 128.0, 0.09); 20];
        let a = run_episode(&scenario, &EnergyModel::default(), &assignment, &trace, 77).unwrap();
        let b = run_episode(&scenario, &EnergyModel::default(), &assignment, &trace, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn wrong_assignment_length_is_rejected() {
        let scenario = lone_scenario();
        let cfg = ProtocolConfig::new(0, 0, 0, 128.0, 1.0);
        assert!(run_episode(
            &scenario,
            &EnergyModel::default(),
            &[cfg, cfg],
            &one_frame_trace(1),
            1
        )
        .is_err());
    }

    #[test]
    fn sleeping_node_spends_horizon_asleep_without_traffic() {
        let scenario = lone_scenario();
        let cfg = ProtocolConfig::new(2, 5, 2, 128.0, 0.1);
        let mut trace = one_frame_trace(1);
        trace.report_times = vec![Vec::new()];
        let out = run_episode(&scenario, &EnergyModel::default(), &[cfg], &trace, 1).unwrap();
        let node = &out.per_node[0];
        let total: u64 = node.state_time_ns.iter().sum();
        assert_eq!(total, SimTime::from_secs(45.0).nanos());
        let awake = node.state_time_ns[Location::Idle.index()];
        assert_eq!(awake, SimTime::from_secs(4.5).nanos());
        let expected = 3.0 * 4.5 + 0.03 * 40.5;
        assert!((node.energy_mj - expected).abs() < 1e-9);
    }
}
