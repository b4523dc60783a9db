//! Dueling bandit policies behind one select/observe interface.
//!
//! A policy proposes a pair with [`DuelingPolicy::select_pair`], is told the
//! outcome of exactly that pair through [`DuelingPolicy::observe`] (`won` is
//! true when the first arm of the pair won) and may be reset at any time.

mod btw;
mod btwr;
mod ws;
mod wss;

pub use btw::BeatTheWinner;
pub use btwr::{round_length, BeatTheWinnerReset};
pub use ws::WinnerStays;
pub use wss::WinnerStaysStrong;

use thiserror::Error;

/// `1/e`, the confidence that makes BtWR's stationary bound `20 K ln K / Δ²`.
pub const DEFAULT_CONFIDENCE: f64 = 1.0 / std::f64::consts::E;

/// Default WSS exploitation growth factor.
pub const DEFAULT_BETA: f64 = 1.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("observed pair {got:?} but the policy proposed {expected:?}")]
    ProtocolViolation {
        expected: Option<(usize, usize)>,
        got: (usize, usize),
    },
    #[error("gap {0} outside (0, 1/2]")]
    InvalidGap(f64),
    #[error("confidence {0} outside (0, 1)")]
    InvalidConfidence(f64),
    #[error("exploitation factor {0} must exceed 1")]
    InvalidBeta(f64),
    #[error("policy needs at least 2 arms, got {0}")]
    TooFewArms(usize),
}

pub trait DuelingPolicy: Send {
    fn num_arms(&self) -> usize;

    /// The pair to play next. Repeated calls without an observation return
    /// the same pair.
    fn select_pair(&mut self) -> (usize, usize);

    fn observe(&mut self, i: usize, j: usize, won: bool) -> Result<(), PolicyError>;

    /// The arm this policy currently believes to be the Condorcet winner.
    fn suspected_winner(&self) -> Option<usize>;

    /// The current champion, if the policy has one.
    fn current_incumbent(&self) -> Option<usize>;

    /// Returns to the freshly initialized distribution. The random stream
    /// continues, so the new state is a fresh draw rather than a replay.
    fn reset(&mut self);
}

impl<P: DuelingPolicy + ?Sized> DuelingPolicy for Box<P> {
    fn num_arms(&self) -> usize {
        (**self).num_arms()
    }
    fn select_pair(&mut self) -> (usize, usize) {
        (**self).select_pair()
    }
    fn observe(&mut self, i: usize, j: usize, won: bool) -> Result<(), PolicyError> {
        (**self).observe(i, j, won)
    }
    fn suspected_winner(&self) -> Option<usize> {
        (**self).suspected_winner()
    }
    fn current_incumbent(&self) -> Option<usize> {
        (**self).current_incumbent()
    }
    fn reset(&mut self) {
        (**self).reset()
    }
}

/// The pair handed out by `select_pair` and not yet observed.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Pending(Option<(usize, usize)>);

impl Pending {
    pub(crate) fn get(&self) -> Option<(usize, usize)> {
        self.0
    }

    pub(crate) fn set(&mut self, pair: (usize, usize)) -> (usize, usize) {
        self.0 = Some(pair);
        pair
    }

    pub(crate) fn take(&mut self, i: usize, j: usize) -> Result<(), PolicyError> {
        match self.0 {
            Some(p) if p == (i, j) => {
                self.0 = None;
                Ok(())
            }
            expected => Err(PolicyError::ProtocolViolation {
                expected,
                got: (i, j),
            }),
        }
    }

    pub(crate) fn clear(&mut self) {
        self.0 = None;
    }
}

pub(crate) fn check_arms(k: usize) -> Result<(), PolicyError> {
    if k < 2 {
        Err(PolicyError::TooFewArms(k))
    } else {
        Ok(())
    }
}
