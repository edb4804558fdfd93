//! Simulation time in integer nanoseconds.
//!
//! All ordering inside the engine happens on integers so that event order is
//! exact and reproducible; conversion to seconds happens only when outcomes
//! are reported.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const NANOS_PER_SEC: u64 = 1_000_000_000;

    pub fn from_secs(secs: f64) -> Self {
        debug_assert!(secs >= 0.0 && secs.is_finite());
        SimTime((secs * Self::NANOS_PER_SEC as f64).round() as u64)
    }

    pub fn from_micros(us: f64) -> Self {
        SimTime((us * 1_000.0).round() as u64)
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / Self::NANOS_PER_SEC as f64
    }

    pub fn nanos(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}s", self.as_secs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seconds_round_trip_on_exact_values() {
        assert_eq!(SimTime::from_secs(3.0).nanos(), 3_000_000_000);
        assert_eq!(SimTime::from_micros(320.0).nanos(), 320_000);
        assert_eq!(SimTime::from_secs(45.0).as_secs(), 45.0);
    }
}
