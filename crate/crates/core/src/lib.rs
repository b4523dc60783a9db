//! Simulation toolkit for dueling bandits with piecewise-stationary
//! preferences.
//!
//! [`env`] holds preference matrices and the seeded duel sampler,
//! [`policies`] the stationary algorithms (WS, WSS, BtW, BtWR),
//! [`detection`] the changepoint wrappers MDB and DETECT, [`regret`] the
//! regret bookkeeping, [`bounds`] closed-form bounds and [`experiments`] the
//! batch harness behind the `duelbench` binary.

#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod cli;
pub mod detection;
pub mod env;
pub mod experiments;
pub mod policies;
pub mod regret;

pub use env::{NonStationaryEnvironment, PreferenceMatrix, SegmentSchedule};
pub use policies::DuelingPolicy;
pub use regret::{RegretKind, RegretTracker};
