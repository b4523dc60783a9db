//! Changepoint detection for dueling bandits: the two-halves window, MDB
//! (round-robin monitoring of every pair) and DETECT (explore with a
//! black box, then monitor the suspected winner's row).

mod detect;
mod mdb;
mod params;
mod window;

pub use detect::{Detect, DetectPhase};
pub use mdb::Mdb;
pub use params::{
    block_len, btw_identification_bound, derive_detect_params, derive_mdb_params,
    detect_ttilde_btw, detect_ttilde_ws, smallest_even_at_least, ws_identification_bound,
    BtwPhaseLength, DetectParams, MdbParams, MdbVariant, WsPhaseLength,
};
pub use window::DetectionWindow;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectionError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("infeasible horizon: {0}")]
    InfeasibleHorizon(String),
    #[error("winning probability {0} outside (1/2, 1]")]
    InvalidProbability(f64),
    #[error("running phase {ttilde} shorter than K^2 = {}", k * k)]
    TooSmallHorizon { ttilde: f64, k: usize },
    #[error("overflow: {0}")]
    Overflow(String),
}
