use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::SimTime;

/// Largest backoff exponent accepted by the automaton.
pub const MAX_BACKOFF_EXPONENT: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventResponseMode {
    /// Alarms wait for the next duty-cycle wake window.
    Normal,
    /// Alarms and blackout recovery override the sleep schedule.
    UrgentPreempt,
}

/// One CSMA/CA strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub be_min: u8,
    pub be_max: u8,
    /// Retransmissions allowed after the initial attempt.
    pub n_retx: u32,
    /// Clear channel assessment duration in microseconds.
    pub cca_us: f64,
    /// Awake fraction of every duty period, in (0, 1].
    pub duty_cycle: f64,
    #[serde(default = "default_mode")]
    pub event_response_mode: EventResponseMode,
}

fn default_mode() -> EventResponseMode {
    EventResponseMode::UrgentPreempt
}

impl ProtocolConfig {
    pub fn new(be_min: u8, be_max: u8, n_retx: u32, cca_us: f64, duty_cycle: f64) -> Self {
        ProtocolConfig {
            be_min,
            be_max,
            n_retx,
            cca_us,
            duty_cycle,
            event_response_mode: EventResponseMode::UrgentPreempt,
        }
    }

    pub fn with_mode(mut self, mode: EventResponseMode) -> Self {
        self.event_response_mode = mode;
        self
    }

    /// Checks every bound; `prefix` is prepended to the offending key name.
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let key = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        if self.be_max > MAX_BACKOFF_EXPONENT {
            return Err(Error::config(
                key("be_max"),
                format!("must be <= {MAX_BACKOFF_EXPONENT}, got {}", self.be_max),
            ));
        }
        if self.be_min > self.be_max {
            return Err(Error::config(
                key("be_min"),
                format!("must be <= be_max ({}), got {}", self.be_max, self.be_min),
            ));
        }
        if !(self.cca_us > 0.0 && self.cca_us.is_finite()) {
            return Err(Error::config(
                key("cca_us"),
                format!("must be > 0, got {}", self.cca_us),
            ));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(Error::config(
                key("duty_cycle"),
                format!("must lie in (0, 1], got {}", self.duty_cycle),
            ));
        }
        Ok(())
    }

    pub fn cca_duration(&self) -> SimTime {
        SimTime::from_micros(self.cca_us)
    }
}

/// Per-location power draw in milliwatts. `p_rx` also covers CCA listening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyModel {
    pub p_tx: f64,
    pub p_rx: f64,
    pub p_idle: f64,
    pub p_sleep: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            p_tx: 60.0,
            p_rx: 54.0,
            p_idle: 3.0,
            p_sleep: 0.03,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let ordered = self.p_tx >= self.p_rx
            && self.p_rx >= self.p_idle
            && self.p_idle >= self.p_sleep
            && self.p_sleep >= 0.0;
        let finite = [self.p_tx, self.p_rx, self.p_idle, self.p_sleep]
            .iter()
            .all(|p| p.is_finite());
        if !(ordered && finite) {
            return Err(Error::config(
                if prefix.is_empty() {
                    "energy_model".to_string()
                } else {
                    prefix.to_string()
                },
                format!(
                    "expected p_tx >= p_rx >= p_idle >= p_sleep >= 0, got {} / {} / {} / {}",
                    self.p_tx, self.p_rx, self.p_idle, self.p_sleep
                ),
            ));
        }
        Ok(())
    }
}

/// Radio and MAC timing constants shared by all nodes of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacTiming {
    /// Unit backoff period (20 symbols at 2.4 GHz).
    pub slot_us: f64,
    /// Data frame airtime (133 bytes at 250 kb/s).
    pub airtime_us: f64,
    /// Delay from end of a delivered frame to ACK reception.
    pub ack_turnaround_us: f64,
    /// macAckWaitDuration, measured from the end of the frame.
    pub ack_wait_us: f64,
    /// RX-to-TX switch between a clear CCA and the first transmitted symbol.
    pub tx_turnaround_us: f64,
    /// Length of one duty-cycle period in seconds.
    pub duty_period_s: f64,
    pub queue_capacity: usize,
}

impl Default for MacTiming {
    fn default() -> Self {
        MacTiming {
            slot_us: 320.0,
            airtime_us: 4256.0,
            ack_turnaround_us: 192.0,
            ack_wait_us: 864.0,
            tx_turnaround_us: 192.0,
            duty_period_s: 1.0,
            queue_capacity: 8,
        }
    }
}

impl MacTiming {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let key = |k: &str| format!("{prefix}{}{k}", if prefix.is_empty() { "" } else { "." });
        for (name, v) in [
            ("slot_us", self.slot_us),
            ("airtime_us", self.airtime_us),
            ("ack_wait_us", self.ack_wait_us),
            ("duty_period_s", self.duty_period_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key(name), format!("must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("ack_turnaround_us", self.ack_turnaround_us),
            ("tx_turnaround_us", self.tx_turnaround_us),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key(name), format!("must be >= 0, got {v}")));
            }
        }
        if self.ack_turnaround_us >= self.ack_wait_us {
            return Err(Error::config(
                key("ack_turnaround_us"),
                "must be shorter than ack_wait_us",
            ));
        }
        if self.queue_capacity == 0 {
            return Err(Error::config(key("queue_capacity"), "must be >= 1"));
        }
        Ok(())
    }
}
