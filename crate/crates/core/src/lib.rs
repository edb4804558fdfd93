//! Discrete-event simulation and statistical verification of IEEE 802.15.4
//! CSMA/CA parameterizations for substation sensor networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`automata`]: per-node priced timed automaton (unslotted CSMA/CA,
//!   duty cycling, alarm preemption, energy accounting).
//! - [`medium`]: shared collision domain and the event engine that composes
//!   N nodes into one episode.
//! - [`workload`]: scenarios and randomized traces (status reports, alarms,
//!   surges, blackout-recovery intervals).
//! - [`cbtl`]: a cost-bounded temporal-logic predicate language evaluated
//!   over episode outcomes.
//! - [`stats`]: Monte Carlo utility estimation, standard errors and exact
//!   Clopper-Pearson bounds.
//! - [`game`]: empirical-game screening with dominance-ratio pruning and
//!   Δ-relaxed Nash certification.
//! - [`config`] and [`cli`]: experiment files, the `simulate` / `screen` /
//!   `certify` / `report` commands and their persisted artifacts.

pub mod automata;
pub mod cbtl;
pub mod cli;
pub mod config;
pub mod error;
pub mod game;
pub mod medium;
pub mod stats;
pub mod time;
pub mod workload;

pub use error::{Error, Result};
pub use time::SimTime;
