use rayon::prelude::*;
use serde::Serialize;

use super::config::{
    AlgorithmKind, AlgorithmParams, AlgorithmSpec, BaseAlgorithm, ExperimentConfig, Generator,
    RunningPhase, RunningPhaseRule,
};
use super::generator::{
    derive_seed, generate_instance, generate_lower_bound_instance, POLICY_STREAM,
};
use super::ExperimentError;
use crate::detection::{
    derive_detect_params, derive_mdb_params, detect_ttilde_btw, detect_ttilde_ws, Detect, Mdb,
};
use crate::env::NonStationaryEnvironment;
use crate::policies::{
    BeatTheWinner, BeatTheWinnerReset, DuelingPolicy, WinnerStays, WinnerStaysStrong,
};
use crate::regret::{checkpoint_grid, instant_regret, RegretKind, RegretTracker};

/// Problem-level values a policy may be tuned with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyContext {
    pub k: usize,
    pub horizon: u64,
    pub segments: usize,
    /// Minimal gap `Δ`.
    pub gap: f64,
    /// Change magnitude `δ`.
    pub change: f64,
}

impl PolicyContext {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let gap = match cfg.generator {
            Generator::Random => cfg.delta_cap,
            Generator::LowerBound => cfg.lower_bound_epsilon(),
        };
        Self {
            k: cfg.k,
            horizon: cfg.horizon,
            segments: cfg.segments,
            gap,
            change: cfg.delta_change,
        }
    }
}

/// A ready-to-run policy plus notes about how its parameters were derived.
pub struct BuiltPolicy {
    pub policy: Box<dyn DuelingPolicy>,
    pub warnings: Vec<String>,
}

fn build_base(
    base: BaseAlgorithm,
    params: &AlgorithmParams,
    ctx: &PolicyContext,
    seed: u64,
) -> Result<Box<dyn DuelingPolicy>, ExperimentError> {
    let gap = params.gap.unwrap_or(ctx.gap);
    Ok(match base {
        BaseAlgorithm::Ws => Box::new(WinnerStays::new(ctx.k, seed)?),
        BaseAlgorithm::Wss => Box::new(WinnerStaysStrong::new(ctx.k, params.beta(), seed)?),
        BaseAlgorithm::Btw => Box::new(BeatTheWinner::new(ctx.k, seed)?),
        BaseAlgorithm::Btwr => Box::new(BeatTheWinnerReset::new(
            ctx.k,
            gap,
            params.confidence(),
            seed,
        )?),
    })
}

fn running_phase_len(
    rule: RunningPhase,
    ctx: &PolicyContext,
    gap: f64,
) -> Result<u64, ExperimentError> {
    let p_min = 0.5 + gap;
    let len = match rule {
        RunningPhase::Fixed(n) => n,
        RunningPhase::Rule(RunningPhaseRule::Sqrt) => (ctx.horizon as f64).sqrt().ceil() as u64,
        RunningPhase::Rule(RunningPhaseRule::BtwBound) => {
            detect_ttilde_btw(ctx.k, ctx.horizon, p_min)?.ttilde
        }
        RunningPhase::Rule(RunningPhaseRule::WsBound) => {
            detect_ttilde_ws(ctx.k, ctx.horizon, p_min)?.ttilde
        }
    };
    Ok(len.max(1))
}

/// Instantiates `spec` for one run.
pub fn build_policy(
    spec: &AlgorithmSpec,
    ctx: &PolicyContext,
    seed: u64,
) -> Result<BuiltPolicy, ExperimentError> {
    let params = &spec.params;
    let change = params.change.unwrap_or(ctx.change);
    let mut warnings = Vec::new();
    let policy: Box<dyn DuelingPolicy> = match spec.kind()? {
        AlgorithmKind::Plain(base) => build_base(base, params, ctx, seed)?,
        AlgorithmKind::Mdb(base) => {
            let bb = build_base(base, params, ctx, seed)?;
            let (w, b, gamma) = match (params.window, params.threshold, params.gamma) {
                (Some(w), Some(b), Some(g)) => (w, b, g),
                (w, b, g) => {
                    let derived = derive_mdb_params(
                        ctx.k,
                        ctx.horizon,
                        ctx.segments,
                        change,
                        params.mdb_variant.unwrap_or_default(),
                    )?;
                    warnings.extend(derived.warnings.iter().cloned());
                    (
                        w.unwrap_or(derived.w),
                        b.unwrap_or(derived.b),
                        g.unwrap_or(derived.gamma),
                    )
                }
            };
            Box::new(Mdb::new(w, b, gamma, bb)?)
        }
        AlgorithmKind::Detect(base) => {
            let bb = build_base(base, params, ctx, seed)?;
            let (w, b) = match (params.window, params.threshold) {
                (Some(w), Some(b)) => (w, b),
                (w, b) => {
                    let derived = derive_detect_params(ctx.horizon, change)?;
                    (w.unwrap_or(derived.w), b.unwrap_or(derived.b))
                }
            };
            let gap = params.gap.unwrap_or(ctx.gap);
            let rule = params.running_phase.unwrap_or_default();
            let len = running_phase_len(rule, ctx, gap)?;
            if len >= ctx.horizon {
                warnings.push(format!(
                    "{}: running phase {len} covers the whole horizon {}",
                    spec.label(),
                    ctx.horizon
                ));
            }
            Box::new(Detect::new(w, b, len, bb)?)
        }
    };
    Ok(BuiltPolicy { policy, warnings })
}

/// Cumulative regret at each checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretCurve {
    pub kind: RegretKind,
    pub points: Vec<(u64, f64)>,
}

impl From<RegretTracker> for RegretCurve {
    fn from(tracker: RegretTracker) -> Self {
        Self {
            kind: tracker.kind(),
            points: tracker.into_checkpoints(),
        }
    }
}

impl RegretCurve {
    pub fn final_value(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }
}

/// Plays `policy` on `env` for the full horizon, tracking every kind in
/// `kinds` on `grid`. The trackers keep the per-pair counts.
pub fn run_instance(
    env: &mut NonStationaryEnvironment,
    policy: &mut dyn DuelingPolicy,
    kinds: &[RegretKind],
    grid: &[u64],
) -> Result<Vec<RegretTracker>, ExperimentError> {
    let k = env.k();
    let segments = env.schedule().num_segments();
    let mut trackers: Vec<RegretTracker> = kinds
        .iter()
        .map(|&kind| RegretTracker::new(kind, k, segments, grid.to_vec()))
        .collect();
    let horizon = env.horizon();
    let mut segment = 0;
    let mut segment_end = env.schedule().segment_range(0).1;
    for t in 1..=horizon {
        while t >= segment_end {
            segment += 1;
            segment_end = env.schedule().segment_range(segment).1;
        }
        let (i, j) = policy.select_pair();
        let won = env.sample_in_segment(segment, t, i, j)?.won;
        let matrix = env.matrix(segment);
        for tracker in &mut trackers {
            tracker.record(
                t,
                segment,
                i,
                j,
                instant_regret(tracker.kind(), matrix, i, j),
            )?;
        }
        policy.observe(i, j, won)?;
    }
    Ok(trackers)
}

/// Mean curve over all instances and the spread of the group means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateResult {
    pub algorithm: String,
    pub kind: RegretKind,
    pub checkpoints: Vec<u64>,
    pub mean: Vec<f64>,
    /// Population standard deviation across the group means.
    pub std: Vec<f64>,
    pub group_means: Vec<Vec<f64>>,
}

impl AggregateResult {
    /// `curves[instance][checkpoint]`, grouped into `groups` contiguous blocks.
    pub fn from_curves(
        algorithm: &str,
        kind: RegretKind,
        checkpoints: Vec<u64>,
        curves: &[Vec<f64>],
        groups: usize,
    ) -> Self {
        let n = curves.len();
        let len = checkpoints.len();
        assert!(
            n > 0 && groups > 0 && n.is_multiple_of(groups),
            "instances must split into groups"
        );
        let per_group = n / groups;
        let block_mean = |block: &[Vec<f64>]| -> Vec<f64> {
            let mut acc = vec![0.0; len];
            for curve in block {
                for (a, v) in acc.iter_mut().zip(curve) {
                    *a += v;
                }
            }
            acc.iter().map(|a| a / block.len() as f64).collect()
        };
        let mean = block_mean(curves);
        let group_means: Vec<Vec<f64>> = curves.chunks(per_group).map(block_mean).collect();
        let std = (0..len)
            .map(|c| {
                let mu = group_means.iter().map(|g| g[c]).sum::<f64>() / groups as f64;
                let var =
                    group_means.iter().map(|g| (g[c] - mu).powi(2)).sum::<f64>() / groups as f64;
                var.sqrt()
            })
            .collect();
        Self {
            algorithm: algorithm.to_string(),
            kind,
            checkpoints,
            mean,
            std,
            group_means,
        }
    }

    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// One entry per (algorithm, regret kind), algorithms in config order.
    pub series: Vec<AggregateResult>,
    pub warnings: Vec<String>,
    /// Runs whose regret decomposition was verified (all of them).
    pub verified_runs: usize,
}

impl ExperimentResult {
    pub fn get(&self, algorithm: &str, kind: RegretKind) -> Option<&AggregateResult> {
        self.series
            .iter()
            .find(|s| s.algorithm == algorithm && s.kind == kind)
    }
}

/// Per-instance output: `curves[algorithm][kind]` and warnings.
type InstanceOutput = (Vec<Vec<Vec<f64>>>, Vec<String>);

fn instance_seed(cfg: &ExperimentConfig, index: usize) -> u64 {
    let index = if cfg.fixed_instance { 0 } else { index as u64 };
    derive_seed(cfg.seed, index)
}

fn make_env(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<NonStationaryEnvironment, ExperimentError> {
    match cfg.generator {
        Generator::Random => generate_instance(
            cfg.k,
            cfg.horizon,
            cfg.segments,
            cfg.delta_cap,
            cfg.delta_change,
            seed,
        ),
        Generator::LowerBound => generate_lower_bound_instance(
            cfg.k,
            cfg.segments,
            cfg.horizon,
            cfg.lower_bound_epsilon(),
            seed,
        ),
    }
}

fn run_one(
    cfg: &ExperimentConfig,
    ctx: &PolicyContext,
    kinds: &[RegretKind],
    grid: &[u64],
    index: usize,
) -> Result<InstanceOutput, ExperimentError> {
    let seed = instance_seed(cfg, index);
    let mut env = make_env(cfg, seed)?;
    let mut curves = Vec::with_capacity(cfg.algorithms.len());
    let mut warnings = Vec::new();
    for spec in &cfg.algorithms {
        env.rewind();
        let mut built = build_policy(spec, ctx, derive_seed(seed, POLICY_STREAM))?;
        if index == 0 {
            warnings.append(&mut built.warnings);
        }
        let trackers = run_instance(&mut env, built.policy.as_mut(), kinds, grid)?;
        let mut per_kind = Vec::with_capacity(kinds.len());
        for tracker in trackers {
            if !tracker.decomposition_check(&env) {
                return Err(ExperimentError::DecompositionFailed {
                    algorithm: spec.label().to_string(),
                    instance: index,
                });
            }
            let curve = RegretCurve::from(tracker);
            per_kind.push(curve.points.into_iter().map(|p| p.1).collect());
        }
        curves.push(per_kind);
    }
    Ok((curves, warnings))
}

/// Runs every algorithm on every instance and aggregates the curves.
///
/// `parallelism` bounds concurrent instances (`None` uses every core);
/// `on_group(done, total)` fires after each instance group. The result does
/// not depend on `parallelism`.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    parallelism: Option<usize>,
    mut on_group: impl FnMut(usize, usize),
) -> Result<ExperimentResult, ExperimentError> {
    cfg.validate()?;
    let ctx = PolicyContext::from_config(cfg);
    let kinds = cfg.regret_kinds();
    let grid = checkpoint_grid(cfg.horizon, cfg.checkpoints);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.unwrap_or(0))
        .build()
        .map_err(|e| ExperimentError::Io(format!("thread pool: {e}")))?;

    let per_group = cfg.instances / cfg.groups;
    let mut outputs: Vec<InstanceOutput> = Vec::with_capacity(cfg.instances);
    for g in 0..cfg.groups {
        let range = g * per_group..(g + 1) * per_group;
        let group: Vec<InstanceOutput> = pool.install(|| {
            range
                .into_par_iter()
                .map(|i| run_one(cfg, &ctx, &kinds, &grid, i))
                .collect::<Result<_, _>>()
        })?;
        outputs.extend(group);
        on_group(g + 1, cfg.groups);
    }

    let mut warnings: Vec<String> = Vec::new();
    for w in outputs.iter().flat_map(|o| &o.1) {
        if !warnings.contains(w) {
            warnings.push(w.clone());
        }
    }
    let mut series = Vec::new();
    for (a, spec) in cfg.algorithms.iter().enumerate() {
        for (k, &kind) in kinds.iter().enumerate() {
            let curves: Vec<Vec<f64>> = outputs.iter().map(|o| o.0[a][k].clone()).collect();
            series.push(AggregateResult::from_curves(
                spec.label(),
                kind,
                grid.clone(),
                &curves,
                cfg.groups,
            ));
        }
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        series,
        warnings,
        verified_runs: cfg.instances * cfg.algorithms.len() * kinds.len(),
    })
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    parallelism: Option<usize>,
) -> Result<ExperimentResult, ExperimentError> {
    run_experiment_with(cfg, parallelism, |_, _| {})
}
