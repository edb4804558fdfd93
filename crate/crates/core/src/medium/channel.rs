use serde::Serialize;

use crate::error::{Error, Result};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transmission {
    pub id: u64,
    pub node: usize,
    pub start: SimTime,
    pub end: SimTime,
}

impl Transmission {
    /// Half-open overlap of `[start, end)` intervals.
    fn overlaps(&self, start: SimTime, end: SimTime) -> bool {
        self.start < end && start < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TxOutcome {
    Delivered,
    Collided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelSense {
    Busy,
    Idle,
}

/// Single collision domain: every node hears every transmission, and any
/// overlap destroys all frames involved.
#[derive(Debug, Clone, Default)]
pub struct ChannelState {
    active: Vec<Transmission>,
    busy_until: SimTime,
    next_id: u64,
}

impl ChannelState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn active(&self) -> &[Transmission] {
        &self.active
    }

    pub fn register(&mut self, node: usize, start: SimTime, end: SimTime) -> Transmission {
        let tx = Transmission {
            id: self.next_id,
            node,
            start,
            end,
        };
        self.next_id += 1;
        self.busy_until = self.busy_until.max(end);
        self.active.push(tx);
        tx
    }

    /// Busy iff some transmission overlaps `[t_start, t_start + duration)`.
    pub fn cca_sample(&self, t_start: SimTime, duration: SimTime) -> ChannelSense {
        let end = t_start + duration;
        if self.active.iter().any(|tx| tx.overlaps(t_start, end)) {
            ChannelSense::Busy
        } else {
            ChannelSense::Idle
        }
    }

    /// Delivered iff no other registered transmission overlapped `completed`.
    pub fn arbitrate(&self, completed: &Transmission) -> Result<TxOutcome> {
        if !self.active.iter().any(|tx| tx.id == completed.id) {
            return Err(Error::Internal(format!(
                "unknown transmission {}",
                completed.id
            )));
        }
        let contended = self
            .active
            .iter()
            .any(|tx| tx.id != completed.id && tx.overlaps(completed.start, completed.end));
        Ok(if contended {
            TxOutcome::Collided
        } else {
            TxOutcome::Delivered
        })
    }

    /// Forgets transmissions that ended before `horizon`.
    pub fn prune(&mut self, horizon: SimTime) {
        self.active.retain(|tx| tx.end >= horizon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: f64) -> SimTime {
        SimTime::from_secs(v / 1000.0)
    }

    #[test]
    fn lone_transmission_is_delivered() {
        let mut ch = ChannelState::new();
        let tx = ch.register(0, ms(0.0), ms(4.0));
        assert_eq!(ch.arbitrate(&tx).unwrap(), TxOutcome::Delivered);
    }

    #[test]
    fn any_overlap_collides_both() {
        let mut ch = ChannelState::new();
        let a = ch.register(0, ms(0.0), ms(4.0));
        let b = ch.register(1, SimTime(ms(4.0).nanos() - 1), ms(8.0));
        assert_eq!(ch.arbitrate(&a).unwrap(), TxOutcome::Collided);
        assert_eq!(ch.arbitrate(&b).unwrap(), TxOutcome::Collided);
    }

    #[test]
    fn disjoint_transmissions_both_delivered() {
        let mut ch = ChannelState::new();
        let a = ch.register(0, ms(0.0), ms(4.0));
        let b = ch.register(1, ms(5.0), ms(9.0));
        assert_eq!(ch.arbitrate(&a).unwrap(), TxOutcome::Delivered);
        assert_eq!(ch.arbitrate(&b).unwrap(), TxOutcome::Delivered);
    }

    #[test]
    fn back_to_back_is_not_overlap() {
        let mut ch = ChannelState::new();
        let a = ch.register(0, ms(0.0), ms(4.0));
        let b = ch.register(1, ms(4.0), ms(8.0));
        assert_eq!(ch.arbitrate(&a).unwrap(), TxOutcome::Delivered);
        assert_eq!(ch.arbitrate(&b).unwrap(), TxOutcome::Delivered);
    }

    #[test]
    fn unknown_transmission_is_an_error() {
        let mut ch = ChannelState::new();
        let a = ch.register(0, ms(0.0), ms(4.0));
        ch.prune(ms(10.0));
        assert!(ch.arbitrate(&a).is_err());
    }

    #[test]
    fn cca_boundaries() {
        let mut ch = ChannelState::new();
        let cca = SimTime::from_micros(128.0);
        assert_eq!(ch.cca_sample(ms(1.0), cca), ChannelSense::Idle);
        ch.register(0, ms(0.0), ms(4.0));
        assert_eq!(ch.cca_sample(ms(1.0), cca), ChannelSense::Busy);
        // transmission ending exactly at the window start
        assert_eq!(ch.cca_sample(ms(4.0), cca), ChannelSense::Idle);
        // transmission starting exactly at the window end
        ch.register(1, ms(10.0) + cca, ms(20.0));
        assert_eq!(ch.cca_sample(ms(10.0), cca), ChannelSense::Idle);
    }
}
