//! Instance generation, batch runs, aggregation and CSV output.
//!
//! Instance `i` of an experiment uses the seed `derive_seed(master, i)`;
//! from it the generator, the duel sampler and the policies each get their
//! own sub-stream. Every algorithm replays the same sampler stream.

mod config;
mod generator;
mod output;
mod runner;

pub use config::{
    AlgorithmKind, AlgorithmParams, AlgorithmSpec, BaseAlgorithm, ExperimentConfig, Generator,
    RegretKinds, RunningPhase, RunningPhaseRule,
};
pub use generator::{derive_seed, generate_instance, generate_lower_bound_instance};
pub use output::{csv_file_name, render_csv, write_csv, CSV_HEADER};
pub use runner::{
    build_policy, run_experiment, run_experiment_with, run_instance, AggregateResult, BuiltPolicy,
    ExperimentResult, PolicyContext, RegretCurve,
};

use thiserror::Error;

use crate::detection::DetectionError;
use crate::env::EnvError;
use crate::policies::PolicyError;
use crate::regret::RegretError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config parse error: {0}")]
    Config(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown algorithm `{0}` (expected btw, btwr, ws, wss, mdb:<base> or detect:<base>)")]
    UnknownAlgorithm(String),
    #[error("infeasible instance: {0}")]
    InfeasibleConfig(String),
    #[error("horizon {horizon} is not divisible by {segments} segments")]
    IndivisibleHorizon { horizon: u64, segments: usize },
    #[error("regret decomposition mismatch for {algorithm} on instance {instance}")]
    DecompositionFailed { algorithm: String, instance: usize },
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Regret(#[from] RegretError),
}
