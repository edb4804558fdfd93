//! Shared wireless medium and the discrete-event engine.
//!
//! [`run_episode`] composes N node automata with a single collision domain
//! and a workload trace, and returns a [`RunOutcome`]. Time is kept in
//! integer nanoseconds and events are totally ordered by
//! `(time, priority, node, sequence)`, so an episode is a pure function of
//! its inputs and seed.

mod channel;
mod engine;
mod outcome;
mod queue;

pub use channel::{ChannelSense, ChannelState, Transmission, TxOutcome};
pub use engine::{run_episode, run_episode_traced, TraceRecord};
pub use outcome::{AlarmEvent, FrameOutcome, NetworkOutcome, NodeOutcome, RunOutcome, TxRecord};
pub use queue::{
    EventQueue, SimEvent, MEDIUM, PRIORITY_END, PRIORITY_MEDIUM, PRIORITY_TIMER, PRIORITY_WORKLOAD,
};
