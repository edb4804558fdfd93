//! Per-node stochastic timed automaton for unslotted IEEE 802.15.4 CSMA/CA.
//!
//! A node moves through six locations (`Sleep`, `Idle`, `BackoffCountdown`,
//! `Cca`, `Transmit`, `AckWait`). Clocks are kept as reset timestamps, and a
//! priced cost variable accrues `power(location) * dwell` on every
//! transition. The automaton never talks to the channel directly: it emits
//! [`MediumAction`]s that the engine in [`crate::medium`] turns into future
//! events.

mod node;
mod protocol;

pub use node::{
    draw_backoff, Clock, DropReason, Frame, FrameKind, FrameRecord, Location, MediumAction,
    NodeAutomaton, NodeEvent, Timer,
};
pub use protocol::{
    EnergyModel, EventResponseMode, MacTiming, ProtocolConfig, MAX_BACKOFF_EXPONENT,
};
