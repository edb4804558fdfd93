use std::collections::VecDeque;
use std::fmt;

use rand::RngCore;
use serde::Serialize;

use super::protocol::{
    EnergyModel, EventResponseMode, MacTiming, ProtocolConfig, MAX_BACKOFF_EXPONENT,
};
use crate::error::{Error, Result};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Location {
    Sleep,
    Idle,
    BackoffCountdown,
    Cca,
    Transmit,
    AckWait,
}

impl Location {
    pub const ALL: [Location; 6] = [
        Location::Sleep,
        Location::Idle,
        Location::BackoffCountdown,
        Location::Cca,
        Location::Transmit,
        Location::AckWait,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_awake(self) -> bool {
        self != Location::Sleep
    }

    /// Power draw in milliwatts while resident in this location.
    pub fn power(self, energy: &EnergyModel) -> f64 {
        match self {
            Location::Sleep => energy.p_sleep,
            Location::Idle | Location::BackoffCountdown => energy.p_idle,
            Location::Cca | Location::AckWait => energy.p_rx,
            Location::Transmit => energy.p_tx,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Status,
    Alarm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Frame {
    pub kind: FrameKind,
    pub created: SimTime,
    pub deadline: SimTime,
    /// Index of the grid alarm that produced this frame.
    pub alarm_id: Option<u32>,
}

impl Frame {
    pub fn status(created: SimTime, deadline: SimTime) -> Self {
        Frame {
            kind: FrameKind::Status,
            created,
            deadline,
            alarm_id: None,
        }
    }

    pub fn alarm(alarm_id: u32, created: SimTime, deadline: SimTime) -> Self {
        Frame {
            kind: FrameKind::Alarm,
            created,
            deadline,
            alarm_id: Some(alarm_id),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    RetryLimit,
    QueueOverflow,
}

/// Life-cycle record of every frame a node has ever accepted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameRecord {
    pub frame: Frame,
    pub delivered: Option<SimTime>,
    /// Cumulative node energy at the instant the ACK was received.
    pub energy_at_delivery_mj: Option<f64>,
    pub dropped: Option<DropReason>,
    /// Transmissions started for this frame.
    pub attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Queued {
    frame: Frame,
    record: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Timer {
    Backoff,
    TxTurnaround,
}

/// Named clocks of the automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    Backoff,
    Cca,
    Tx,
    AckWait,
    Duty,
}

impl Clock {
    pub fn name(self) -> &'static str {
        match self {
            Clock::Backoff => "x_bo",
            Clock::Cca => "x_cca",
            Clock::Tx => "x_tx",
            Clock::AckWait => "x_ack",
            Clock::Duty => "x_duty",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeEvent {
    FrameArrival(Frame),
    TimerFire { timer: Timer, token: u64 },
    ChannelBusy,
    ChannelIdle,
    TxAirtimeComplete,
    AckReceived,
    AckTimeout,
    DutyWake,
    DutySleep,
    GridAlarmBroadcast(Frame),
    RecoveryStart,
    RecoveryEnd,
}

impl NodeEvent {
    pub fn name(&self) -> &'static str {
        match self {
            NodeEvent::FrameArrival(_) => "FrameArrival",
            NodeEvent::TimerFire {
                timer: Timer::Backoff,
                ..
            } => "TimerFire(x_bo)",
            NodeEvent::TimerFire {
                timer: Timer::TxTurnaround,
                ..
            } => "TimerFire(x_tx)",
            NodeEvent::ChannelBusy => "ChannelBusy",
            NodeEvent::ChannelIdle => "ChannelIdle",
            NodeEvent::TxAirtimeComplete => "TxAirtimeComplete",
            NodeEvent::AckReceived => "AckReceived",
            NodeEvent::AckTimeout => "AckTimeout",
            NodeEvent::DutyWake => "DutyWake",
            NodeEvent::DutySleep => "DutySleep",
            NodeEvent::GridAlarmBroadcast(_) => "GridAlarmBroadcast",
            NodeEvent::RecoveryStart => "RecoveryStart",
            NodeEvent::RecoveryEnd => "RecoveryEnd",
        }
    }
}

/// Requests a node makes of the engine and the shared medium.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MediumAction {
    /// Deliver `TimerFire { timer, token }` back to this node at `at`.
    StartTimer {
        timer: Timer,
        at: SimTime,
        token: u64,
    },
    /// Sense the channel over `[now, now + duration)`.
    CcaRequest { duration: SimTime },
    /// Occupy the channel over `[now, now + airtime)`.
    TxStart { airtime: SimTime },
}

/// Uniform backoff on `{0, .., 2^be - 1}` slots. Always consumes exactly one
/// 32-bit draw from `rng`, so event streams stay aligned across runs.
pub fn draw_backoff<R: RngCore + ?Sized>(be: u8, rng: &mut R) -> Result<u32> {
    if be > MAX_BACKOFF_EXPONENT {
        return Err(Error::Internal(format!(
            "backoff exponent {be} out of range"
        )));
    }
    let x = rng.next_u32();
    Ok(if be == 0 {
        0
    } else {
        x >> (32 - u32::from(be))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeAutomaton {
    node_id: usize,
    config: ProtocolConfig,
    energy: EnergyModel,
    slot: SimTime,
    airtime: SimTime,
    tx_turnaround: SimTime,
    cca: SimTime,
    queue_capacity: usize,

    location: Location,
    last_update: SimTime,
    be_current: u8,
    /// Failed attempts on the frame in service.
    attempt_count: u32,
    queue: VecDeque<Queued>,
    current: Option<Queued>,
    records: Vec<FrameRecord>,

    energy_mj: f64,
    state_time: [u64; 6],
    success_count: u32,
    retransmissions: u32,

    window_open: bool,
    in_recovery: bool,
    recovery_awake_ns: u64,
    recovery_total_ns: u64,

    clock_resets: [SimTime; 5],
    next_token: u64,
    armed: Option<(Timer, u64)>,
}

impl NodeAutomaton {
    pub fn new(
        config: ProtocolConfig,
        energy: EnergyModel,
        timing: &MacTiming,
        node_id: usize,
    ) -> Result<Self> {
        config.validate("")?;
        energy.validate("")?;
        timing.validate("mac")?;
        Ok(NodeAutomaton {
            node_id,
            config,
            energy,
            slot: SimTime::from_micros(timing.slot_us),
            airtime: SimTime::from_micros(timing.airtime_us),
            tx_turnaround: SimTime::from_micros(timing.tx_turnaround_us),
            cca: config.cca_duration(),
            queue_capacity: timing.queue_capacity,
            location: Location::Sleep,
            last_update: SimTime::ZERO,
            be_current: config.be_min,
            attempt_count: 0,
            queue: VecDeque::new(),
            current: None,
            records: Vec::new(),
            energy_mj: 0.0,
            state_time: [0; 6],
            success_count: 0,
            retransmissions: 0,
            window_open: false,
            in_recovery: false,
            recovery_awake_ns: 0,
            recovery_total_ns: 0,
            clock_resets: [SimTime::ZERO; 5],
            next_token: 0,
            armed: None,
        })
    }

    pub fn node_id(&self) -> usize {
        self.node_id
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn location(&self) -> Location {
        self.location
    }

    pub fn be_current(&self) -> u8 {
        self.be_current
    }

    pub fn attempt_count(&self) -> u32 {
        self.attempt_count
    }

    pub fn energy_mj(&self) -> f64 {
        self.energy_mj
    }

    pub fn success_count(&self) -> u32 {
        self.success_count
    }

    pub fn retransmissions(&self) -> u32 {
        self.retransmissions
    }

    pub fn records(&self) -> &[FrameRecord] {
        &self.records
    }

    pub fn last_update(&self) -> SimTime {
        self.last_update
    }

    /// Frames accepted but neither delivered nor dropped.
    pub fn pending_frames(&self) -> usize {
        self.queue.len() + usize::from(self.current.is_some())
    }

    pub fn state_time(&self, loc: Location) -> SimTime {
        SimTime(self.state_time[loc.index()])
    }

    pub fn state_times_ns(&self) -> [u64; 6] {
        self.state_time
    }

    pub fn clock(&self, clock: Clock, now: SimTime) -> SimTime {
        now.saturating_sub(self.clock_resets[clock as usize])
    }

    /// Σ power(loc) · dwell(loc), recomputed from the dwell table.
    pub fn energy_from_state_times(&self) -> f64 {
        Location::ALL
            .iter()
            .map(|l| l.power(&self.energy) * self.state_time(*l).as_secs())
            .sum()
    }

    /// Awake share of all blackout-recovery time seen so far, if any.
    pub fn recovery_availability(&self) -> Option<f64> {
        (self.recovery_total_ns > 0)
            .then(|| self.recovery_awake_ns as f64 / self.recovery_total_ns as f64)
    }

    /// Integrates the current location's power up to `to`; returns the mJ added.
    pub fn accrue_energy(&mut self, to: SimTime) -> Result<f64> {
        if to < self.last_update {
            return Err(Error::Internal(format!(
                "node {}: time moved backwards from {} to {}",
                self.node_id, self.last_update, to
            )));
        }
        let dt = (to - self.last_update).nanos();
        // mW * s = mJ
        let added = self.location.power(&self.energy) * (dt as f64 / SimTime::NANOS_PER_SEC as f64);
        self.energy_mj += added;
        self.state_time[self.location.index()] += dt;
        if self.in_recovery {
            self.recovery_total_ns += dt;
            if self.location.is_awake() {
                self.recovery_awake_ns += dt;
            }
        }
        self.last_update = to;
        Ok(added)
    }

    pub fn handle_event<R: RngCore + ?Sized>(
        &mut self,
        event: NodeEvent,
        now: SimTime,
        rng: &mut R,
        out: &mut Vec<MediumAction>,
    ) -> Result<()> {
        self.accrue_energy(now)?;
        match event {
            NodeEvent::FrameArrival(frame) => {
                self.enqueue(frame);
                if self.location == Location::Idle && self.current.is_none() {
                    self.next_step(now, rng, out)?;
                }
            }
            NodeEvent::GridAlarmBroadcast(frame) => {
                self.enqueue(frame);
                let wake = self.location == Location::Sleep && self.urgent();
                let idle = self.location == Location::Idle && self.current.is_none();
                if wake || idle {
                    self.next_step(now, rng, out)?;
                }
            }
            NodeEvent::TimerFire { timer, token } => {
                if self.armed != Some((timer, token)) {
                    // cancelled timer
                    return Ok(());
                }
                self.armed = None;
                match (timer, self.location) {
                    (Timer::Backoff, Location::BackoffCountdown) => {
                        self.location = Location::Cca;
                        self.reset(Clock::Cca, now);
                        out.push(MediumAction::CcaRequest { duration: self.cca });
                    }
                    (Timer::TxTurnaround, Location::Transmit) => self.begin_tx(out),
                    _ => return Err(self.not_enabled(&event)),
                }
            }
            NodeEvent::ChannelIdle => {
                self.require(Location::Cca, &event)?;
                self.location = Location::Transmit;
                self.reset(Clock::Tx, now);
                if self.tx_turnaround == SimTime::ZERO {
                    self.begin_tx(out);
                } else {
                    let at = now + self.tx_turnaround;
                    self.arm(Timer::TxTurnaround, at, out);
                }
            }
            NodeEvent::ChannelBusy => {
                self.require(Location::Cca, &event)?;
                self.bump_be();
                self.next_step(now, rng, out)?;
            }
            NodeEvent::TxAirtimeComplete => {
                self.require(Location::Transmit, &event)?;
                self.location = Location::AckWait;
                self.reset(Clock::AckWait, now);
            }
            NodeEvent::AckReceived => {
                self.require(Location::AckWait, &event)?;
                let q = self.take_current()?;
                let rec = &mut self.records[q.record];
                rec.delivered = Some(now);
                rec.energy_at_delivery_mj = Some(self.energy_mj);
                self.success_count += 1;
                self.finish_frame();
                self.next_step(now, rng, out)?;
            }
            NodeEvent::AckTimeout => {
                self.require(Location::AckWait, &event)?;
                self.attempt_count += 1;
                if self.attempt_count > self.config.n_retx {
                    let q = self.take_current()?;
                    self.records[q.record].dropped = Some(DropReason::RetryLimit);
                    self.finish_frame();
                } else {
                    self.bump_be();
                    self.retransmissions += 1;
                }
                self.next_step(now, rng, out)?;
            }
            NodeEvent::DutyWake => {
                self.window_open = true;
                self.reset(Clock::Duty, now);
                if self.location == Location::Sleep {
                    self.next_step(now, rng, out)?;
                }
            }
            NodeEvent::DutySleep => {
                self.window_open = false;
                self.reset(Clock::Duty, now);
                self.settle();
            }
            NodeEvent::RecoveryStart => {
                self.in_recovery = true;
                if self.location == Location::Sleep && self.urgent() {
                    self.next_step(now, rng, out)?;
                }
            }
            NodeEvent::RecoveryEnd => {
                self.in_recovery = false;
                self.settle();
            }
        }
        Ok(())
    }

    fn urgent(&self) -> bool {
        self.config.event_response_mode == EventResponseMode::UrgentPreempt
    }

    fn holds_alarm(&self) -> bool {
        // alarms are queued at the head
        self.current
            .is_some_and(|q| q.frame.kind == FrameKind::Alarm)
            || self
                .queue
                .front()
                .is_some_and(|q| q.frame.kind == FrameKind::Alarm)
    }

    fn may_sleep(&self) -> bool {
        !self.window_open && !(self.urgent() && (self.in_recovery || self.holds_alarm()))
    }

    fn reset(&mut self, clock: Clock, now: SimTime) {
        self.clock_resets[clock as usize] = now;
    }

    fn arm(&mut self, timer: Timer, at: SimTime, out: &mut Vec<MediumAction>) {
        self.next_token += 1;
        self.armed = Some((timer, self.next_token));
        out.push(MediumAction::StartTimer {
            timer,
            at,
            token: self.next_token,
        });
    }

    fn bump_be(&mut self) {
        self.be_current = (self.be_current + 1).min(self.config.be_max);
    }

    fn begin_tx(&mut self, out: &mut Vec<MediumAction>) {
        if let Some(q) = self.current {
            self.records[q.record].attempts += 1;
        }
        out.push(MediumAction::TxStart {
            airtime: self.airtime,
        });
    }

    fn take_current(&mut self) -> Result<Queued> {
        self.current
            .take()
            .ok_or_else(|| Error::Internal(format!("node {}: no frame in service", self.node_id)))
    }

    fn finish_frame(&mut self) {
        self.be_current = self.config.be_min;
        self.attempt_count = 0;
    }

    /// Leaves Idle/BackoffCountdown for Sleep when nothing keeps the radio on.
    fn settle(&mut self) {
        if matches!(self.location, Location::Idle | Location::BackoffCountdown) && self.may_sleep()
        {
            self.armed = None;
            self.location = Location::Sleep;
        }
    }

    /// Decision point after a frame completes, the channel is busy, or the
    /// node wakes: serve the next frame, go idle, or sleep.
    fn next_step<R: RngCore + ?Sized>(
        &mut self,
        now: SimTime,
        rng: &mut R,
        out: &mut Vec<MediumAction>,
    ) -> Result<()> {
        if self.current.is_none() {
            if let Some(q) = self.queue.pop_front() {
                self.current = Some(q);
                self.be_current = self.config.be_min;
                self.attempt_count = 0;
            }
        }
        self.armed = None;
        if self.may_sleep() {
            self.location = Location::Sleep;
            return Ok(());
        }
        if self.current.is_some() {
            let slots = draw_backoff(self.be_current, rng)?;
            self.location = Location::BackoffCountdown;
            self.reset(Clock::Backoff, now);
            let at = now + SimTime(self.slot.nanos() * u64::from(slots));
            self.arm(Timer::Backoff, at, out);
        } else {
            self.location = Location::Idle;
        }
        Ok(())
    }

    fn enqueue(&mut self, frame: Frame) {
        let record = self.records.len();
        self.records.push(FrameRecord {
            frame,
            delivered: None,
            energy_at_delivery_mj: None,
            dropped: None,
            attempts: 0,
        });
        let q = Queued { frame, record };
        match frame.kind {
            FrameKind::Alarm => self.queue.push_front(q),
            FrameKind::Status => self.queue.push_back(q),
        }
        if self.queue.len() > self.queue_capacity {
            // evict the oldest status frame; alarms are never evicted
            if let Some(pos) = self
                .queue
                .iter()
                .position(|q| q.frame.kind == FrameKind::Status)
            {
                let evicted = self.queue.remove(pos).expect("position is in range");
                self.records[evicted.record].dropped = Some(DropReason::QueueOverflow);
            }
        }
    }

    fn require(&self, loc: Location, event: &NodeEvent) -> Result<()> {
        if self.location == loc {
            Ok(())
        } else {
            Err(self.not_enabled(event))
        }
    }

    fn not_enabled(&self, event: &NodeEvent) -> Error {
        Error::Protocol {
            node: self.node_id,
            location: self.location.to_string(),
            event: event.name().to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config_b() -> ProtocolConfig {
        ProtocolConfig::new(2, 5, 2, 128.0, 0.09)
    }

    fn node(config: ProtocolConfig) -> NodeAutomaton {
        NodeAutomaton::new(config, EnergyModel::default(), &MacTiming::default(), 0).unwrap()
    }

    fn t(secs: f64) -> SimTime {
        SimTime::from_secs(secs)
    }

    fn status_at(secs: f64) -> Frame {
        Frame::status(t(secs), t(secs + 45.0))
    }

    /// Wakes the node and hands it one frame; returns the armed backoff action.
    fn awake_with_frame(n: &mut NodeAutomaton, rng: &mut ChaCha8Rng) -> MediumAction {
        let mut out = Vec::new();
        n.handle_event(NodeEvent::DutyWake, t(0.0), rng, &mut out)
            .unwrap();
        assert_eq!(n.location(), Location::Idle);
        n.handle_event(
            NodeEvent::FrameArrival(status_at(0.0)),
            t(0.0),
            rng,
            &mut out,
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        out[0]
    }

    fn fire(
        n: &mut NodeAutomaton,
        action: MediumAction,
        rng: &mut ChaCha8Rng,
    ) -> Vec<MediumAction> {
        let MediumAction::StartTimer { timer, at, token } = action else {
            panic!("expected a timer, got {action:?}");
        };
        let mut out = Vec::new();
        n.handle_event(NodeEvent::TimerFire { timer, token }, at, rng, &mut out)
            .unwrap();
        out
    }

    #[test]
    fn new_node_starts_asleep_with_be_min() {
        let n = node(config_b());
        assert_eq!(n.location(), Location::Sleep);
        assert_eq!(n.be_current(), 2);
        assert_eq!(n.attempt_count(), 0);
        assert_eq!(n.energy_mj(), 0.0);
        assert_eq!(n.success_count(), 0);
        assert_eq!(n.retransmissions(), 0);
    }

    #[test]
    fn new_node_rejects_bad_config() {
        let mut c = config_b();
        c.duty_cycle = 0.0;
        let err =
            NodeAutomaton::new(c, EnergyModel::default(), &MacTiming::default(), 0).unwrap_err();
        assert!(err.to_string().contains("duty_cycle"));
        let c = ProtocolConfig::new(5, 2, 2, 128.0, 0.09);
        let err =
            NodeAutomaton::new(c, EnergyModel::default(), &MacTiming::default(), 0).unwrap_err();
        assert!(err.to_string().contains("be_min"));
    }

    #[test]
    fn backoff_zero_exponent_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(draw_backoff(0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn backoff_be2_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[draw_backoff(2, &mut rng).unwrap() as usize] += 1;
        }
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!(
                (c as f64 - draws as f64 * 0.25).abs() < 4.0 * sigma,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn backoff_be5_covers_its_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = [false; 32];
        for _ in 0..20_000 {
            let v = draw_backoff(5, &mut rng).unwrap();
            assert!(v < 32);
            seen[v as usize] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn backoff_rejects_large_exponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(draw_backoff(9, &mut rng), Err(Error::Internal(_))));
    }

    #[test]
    fn backoff_consumes_one_draw() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        for be in 0..=8 {
            draw_backoff(be, &mut a).unwrap();
            b.next_u32();
        }
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn frame_arrival_in_idle_starts_backoff() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut n = node(config_b());
        let action = awake_with_frame(&mut n, &mut rng);
        assert_eq!(n.location(), Location::BackoffCountdown);
        // only the backoff timer is armed; nothing reaches the channel yet
        let MediumAction::StartTimer { timer, at, .. } = action else {
            panic!()
        };
        assert_eq!(timer, Timer::Backoff);
        assert!(at.nanos() % 320_000 == 0 && at.nanos() < 4 * 320_000);
    }

    #[test]
    fn busy_channel_at_be_max_stays_clamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut n = node(ProtocolConfig::new(2, 3, 2, 128.0, 1.0));
        let mut action = awake_with_frame(&mut n, &mut rng);
        for expected_be in [3, 3, 3] {
            let out = fire(&mut n, action, &mut rng);
            assert_eq!(
                out,
                vec![MediumAction::CcaRequest {
                    duration: SimTime::from_micros(128.0)
                }]
            );
            let now = n.last_update() + SimTime::from_micros(128.0);
            let mut out = Vec::new();
            n.handle_event(NodeEvent::ChannelBusy, now, &mut rng, &mut out)
                .unwrap();
            assert_eq!(n.be_current(), expected_be);
            assert_eq!(
                n.attempt_count(),
                0,
                "busy channel must not consume a retry"
            );
            assert_eq!(n.location(), Location::BackoffCountdown);
            action = out[0];
        }
    }

    /// Drives one attempt from backoff expiry to AckWait.
    fn one_attempt(n: &mut NodeAutomaton, action: MediumAction, rng: &mut ChaCha8Rng) {
        let out = fire(n, action, rng);
        assert!(matches!(out[0], MediumAction::CcaRequest { .. }));
        let mut now = n.last_update() + SimTime::from_micros(128.0);
        let mut out = Vec::new();
        n.handle_event(NodeEvent::ChannelIdle, now, rng, &mut out)
            .unwrap();
        assert_eq!(n.location(), Location::Transmit);
        let out = fire(n, out[0], rng);
        assert_eq!(
            out,
            vec![MediumAction::TxStart {
                airtime: SimTime::from_micros(4256.0)
            }]
        );
        now = n.last_update() + SimTime::from_micros(4256.0);
        n.handle_event(NodeEvent::TxAirtimeComplete, now, rng, &mut Vec::new())
            .unwrap();
        assert_eq!(n.location(), Location::AckWait);
    }

    #[test]
    fn third_failed_attempt_drops_frame_with_two_retries() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut n = node(ProtocolConfig::new(2, 5, 2, 128.0, 1.0));
        let mut action = awake_with_frame(&mut n, &mut rng);
        for attempt in 1..=3u32 {
            one_attempt(&mut n, action, &mut rng);
            let now = n.last_update() + SimTime::from_micros(864.0);
            let mut out = Vec::new();
            n.handle_event(NodeEvent::AckTimeout, now, &mut rng, &mut out)
                .unwrap();
            if attempt < 3 {
                assert_eq!(n.attempt_count(), attempt);
                assert_eq!(n.be_current(), 2 + attempt as u8);
                action = out[0];
            } else {
                assert!(out.is_empty());
                assert_eq!(n.attempt_count(), 0);
                assert_eq!(n.be_current(), 2);
                assert_eq!(n.location(), Location::Idle);
            }
        }
        let rec = &n.records()[0];
        assert_eq!(rec.dropped, Some(DropReason::RetryLimit));
        assert_eq!(rec.delivered, None);
        assert_eq!(rec.attempts, 3);
        assert_eq!(n.retransmissions(), 2);
    }

    #[test]
    fn ack_resets_contention_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut n = node(ProtocolConfig::new(2, 5, 2, 128.0, 1.0));
        let action = awake_with_frame(&mut n, &mut rng);
        one_attempt(&mut n, action, &mut rng);
        let mut out = Vec::new();
        let now = n.last_update() + SimTime::from_micros(864.0);
        n.handle_event(NodeEvent::AckTimeout, now, &mut rng, &mut out)
            .unwrap();
        one_attempt(&mut n, out[0], &mut rng);
        let now = n.last_update() + SimTime::from_micros(192.0);
        n.handle_event(NodeEvent::AckReceived, now, &mut rng, &mut Vec::new())
            .unwrap();
        assert_eq!(n.success_count(), 1);
        assert_eq!(n.be_current(), 2);
        assert_eq!(n.attempt_count(), 0);
        assert_eq!(n.pending_frames(), 0);
        assert_eq!(n.records()[0].delivered, Some(now));
        assert_eq!(n.records()[0].attempts, 2);
    }

    #[test]
    fn events_outside_their_location_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut n = node(config_b());
        let err = n
            .handle_event(NodeEvent::AckTimeout, t(0.0), &mut rng, &mut Vec::new())
            .unwrap_err();
        let Error::Protocol {
            location, event, ..
        } = err
        else {
            panic!("{err}")
        };
        assert_eq!((location.as_str(), event.as_str()), ("Sleep", "AckTimeout"));
    }

    #[test]
    fn time_must_not_run_backwards() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut n = node(config_b());
        n.handle_event(NodeEvent::DutyWake, t(1.0), &mut rng, &mut Vec::new())
            .unwrap();
        let err = n.handle_event(NodeEvent::DutySleep, t(0.5), &mut rng, &mut Vec::new());
        assert!(matches!(err, Err(Error::Internal(_))));
    }

    #[test]
    fn accrual_arithmetic() {
        let mut n = node(config_b());
        // Sleep at 0.03 mW for 10 s
        let added = n.accrue_energy(t(10.0)).unwrap();
        assert!((added - 0.3).abs() < 1e-12);
        assert_eq!(n.accrue_energy(t(10.0)).unwrap(), 0.0);
        assert_eq!(n.state_time(Location::Sleep), t(10.0));

        let p_tx = EnergyModel::default().p_tx;
        assert!((p_tx * 0.004 - 0.24).abs() < 1e-12);
    }

    #[test]
    fn transmit_accrues_at_tx_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut n = node(ProtocolConfig::new(0, 0, 0, 128.0, 1.0));
        let action = awake_with_frame(&mut n, &mut rng);
        let before = n.energy_mj();
        one_attempt(&mut n, action, &mut rng);
        // CCA at p_rx, then turnaround + airtime at p_tx
        let expected = 54.0 * 128e-6 + 60.0 * (192e-6 + 4256e-6);
        assert!((n.energy_mj() - before - expected).abs() < 1e-12);
    }

    #[test]
    fn urgent_alarm_wakes_sleeping_node() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut n = node(config_b());
        let mut out = Vec::new();
        n.handle_event(
            NodeEvent::GridAlarmBroadcast(Frame::alarm(0, t(2.0), t(5.0))),
            t(2.0),
            &mut rng,
            &mut out,
        )
        .unwrap();
        assert_eq!(n.location(), Location::BackoffCountdown);
        assert_eq!(out.len(), 1);

        let mut sleepy = node(config_b().with_mode(EventResponseMode::Normal));
        let mut out = Vec::new();
        sleepy
            .handle_event(
                NodeEvent::GridAlarmBroadcast(Frame::alarm(0, t(2.0), t(5.0))),
                t(2.0),
                &mut rng,
                &mut out,
            )
            .unwrap();
        assert_eq!(sleepy.location(), Location::Sleep);
        assert!(out.is_empty());
        assert_eq!(sleepy.pending_frames(), 1);
    }

    #[test]
    fn alarm_jumps_the_queue_and_overflow_evicts_status() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut n = node(config_b().with_mode(EventResponseMode::Normal));
        for i in 0..8 {
            n.handle_event(
                NodeEvent::FrameArrival(status_at(i as f64)),
                t(i as f64),
                &mut rng,
                &mut Vec::new(),
            )
            .unwrap();
        }
        n.handle_event(
            NodeEvent::GridAlarmBroadcast(Frame::alarm(0, t(9.0), t(12.0))),
            t(9.0),
            &mut rng,
            &mut Vec::new(),
        )
        .unwrap();
        assert_eq!(n.pending_frames(), 8);
        assert_eq!(n.records()[0].dropped, Some(DropReason::QueueOverflow));
        assert!(n.records()[8].dropped.is_none());
        // the alarm is served first on wake
        n.handle_event(NodeEvent::DutyWake, t(10.0), &mut rng, &mut Vec::new())
            .unwrap();
        assert_eq!(n.current.map(|q| q.frame.kind), Some(FrameKind::Alarm));
    }

    #[test]
    fn duty_sleep_cancels_backoff() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut n = node(config_b());
        let action = awake_with_frame(&mut n, &mut rng);
        n.handle_event(NodeEvent::DutySleep, t(0.0), &mut rng, &mut Vec::new())
            .unwrap();
        assert_eq!(n.location(), Location::Sleep);
        // the stale timer is ignored
        let out = {
            let MediumAction::StartTimer { timer, token, .. } = action else {
                panic!()
            };
            let mut out = Vec::new();
            n.handle_event(
                NodeEvent::TimerFire { timer, token },
                t(0.01),
                &mut rng,
                &mut out,
            )
            .unwrap();
            out
        };
        assert!(out.is_empty());
        assert_eq!(n.location(), Location::Sleep);
        assert_eq!(n.pending_frames(), 1);
    }
}
