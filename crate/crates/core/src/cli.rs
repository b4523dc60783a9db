//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for configuration and runtime failures, 2 for
//! usage errors (clap's own parse failures also exit with 2).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{
    btwr_nonstationary_bound, btwr_stationary_bound, delay_bound, detect_regret_bound,
    false_alarm_bound, lower_bound_epsilon, mdb_regret_bound, weak_lower_bound, BoundReport,
};
use crate::detection::{
    derive_detect_params, derive_mdb_params, detect_ttilde_btw, detect_ttilde_ws, MdbVariant,
};
use crate::experiments::{
    csv_file_name, run_experiment_with, write_csv, ExperimentConfig, ExperimentError,
    ExperimentResult,
};

pub const SEED_ENV_VAR: &str = "DUELBENCH_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "duelbench",
    version,
    about = "Non-stationary dueling bandit simulations"
)]
pub struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed; overrides DUELBENCH_SEED and the config.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Concurrent instance runs (default: all cores).
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub parallelism: Option<u64>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured experiment and write CSVs plus summary.json.
    Run,
    /// Print derived detector parameters.
    Params(ParamsArgs),
    /// Print theoretical bounds.
    Bounds(BoundsArgs),
    /// Check a config without running it.
    Validate,
    /// Run the config once per value of one key.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long = "T")]
    pub horizon: u64,
    #[arg(long = "M", default_value_t = 1)]
    pub segments: usize,
    /// Segmental change `δ` for MDB.
    #[arg(long)]
    pub delta: f64,
    /// Winner change `δ*` for DETECT (default: `delta`).
    #[arg(long)]
    pub delta_star: Option<f64>,
    /// Smallest winning probability of the Condorcet winner.
    #[arg(long, default_value_t = 0.6)]
    pub p_min: f64,
    /// Use the log term with the extra `δ` factor.
    #[arg(long)]
    pub delta_scaled_log: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long = "T")]
    pub horizon: u64,
    #[arg(long = "M", default_value_t = 1)]
    pub segments: usize,
    /// Minimal gap `Δ`.
    #[arg(long, default_value_t = 0.1)]
    pub gap: f64,
    /// Change magnitude `δ` (and `δ*`) for the detector bounds.
    #[arg(long, default_value_t = 0.6)]
    pub delta: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `KEY=v1,v2,...` with KEY one of K, T, M, delta_cap, delta_change,
    /// instances, groups, seed, epsilon.
    #[arg(long, value_name = "KEY=VALUES")]
    pub vary: String,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Serialize)]
struct SeriesSummary<'a> {
    algorithm: &'a str,
    regret_kind: String,
    file: String,
    final_mean: f64,
    final_std: f64,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    series: Vec<SeriesSummary<'a>>,
    warnings: &'a [String],
    verified_runs: usize,
}

/// Executes `cli`. `env_seed` is the value of DUELBENCH_SEED, if set.
pub fn execute(cli: &Cli, env_seed: Option<&str>, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Run => {
            let cfg = load_config(cli, env_seed)?;
            let dir = cli.out.clone().unwrap_or_else(|| cfg.output.clone());
            run_and_write(cli, &cfg, &dir, out)
        }
        Command::Validate => {
            let cfg = load_config(cli, env_seed)?;
            writeln!(
                out,
                "ok: K={} T={} M={} instances={} groups={} algorithms={}",
                cfg.k,
                cfg.horizon,
                cfg.segments,
                cfg.instances,
                cfg.groups,
                cfg.algorithms.len()
            )
            .map_err(io_err)
        }
        Command::Sweep(args) => {
            let cfg = load_config(cli, env_seed)?;
            let (key, values) = args.vary.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("--vary expects KEY=v1,v2, got `{}`", args.vary))
            })?;
            let base_dir = cli.out.clone().unwrap_or_else(|| cfg.output.clone());
            let values: Vec<&str> = values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .collect();
            if values.is_empty() {
                return Err(CliError::Usage("--vary needs at least one value".into()));
            }
            let mut variants = Vec::with_capacity(values.len());
            for value in &values {
                let mut variant = cfg.clone();
                variant.set_value(key, value)?;
                variant.validate()?;
                variants.push(variant);
            }
            for (value, variant) in values.iter().zip(&variants) {
                let dir = base_dir.join(format!("{key}_{value}"));
                run_and_write(cli, variant, &dir, out)?;
            }
            Ok(())
        }
        Command::Params(args) => print_params(args, out),
        Command::Bounds(args) => print_bounds(args, out),
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Failed(format!("write failed: {e}"))
}

fn load_config(cli: &Cli, env_seed: Option<&str>) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("this command needs --config PATH".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    } else if let Some(raw) = env_seed {
        cfg.seed = raw.trim().parse().map_err(|_| {
            CliError::Failed(format!(
                "{SEED_ENV_VAR}=`{raw}` is not an unsigned 64-bit integer"
            ))
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_and_write(
    cli: &Cli,
    cfg: &ExperimentConfig,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let quiet = cli.quiet;
    let result = run_experiment_with(cfg, cli.parallelism.map(|n| n as usize), |done, total| {
        if !quiet {
            eprintln!("group {done}/{total} done");
        }
    })?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let paths = write_csv(&result, dir)?;
    write_summary(&result, dir)?;
    for p in &paths {
        writeln!(out, "{}", p.display()).map_err(io_err)?;
    }
    Ok(())
}

fn write_summary(result: &ExperimentResult, dir: &Path) -> Result<(), CliError> {
    let summary = Summary {
        config: &result.config,
        series: result
            .series
            .iter()
            .map(|s| SeriesSummary {
                algorithm: &s.algorithm,
                regret_kind: s.kind.to_string(),
                file: csv_file_name(s),
                final_mean: s.final_mean(),
                final_std: s.std.last().copied().unwrap_or(0.0),
            })
            .collect(),
        warnings: &result.warnings,
        verified_runs: result.verified_runs,
    };
    let path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Failed(format!("summary: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

fn print_params(args: &ParamsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let fail = |e: crate::detection::DetectionError| CliError::Failed(e.to_string());
    let (variant, variant_name) = if args.delta_scaled_log {
        (MdbVariant::DeltaScaled, "delta_scaled")
    } else {
        (MdbVariant::Main, "main")
    };
    let delta_star = args.delta_star.unwrap_or(args.delta);
    let mut text = String::new();
    let mut line = |s: String| {
        text.push_str(&s);
        text.push('\n');
    };
    line(format!(
        "K={} T={} M={} delta={} delta_star={delta_star} p_min={}",
        args.k, args.horizon, args.segments, args.delta, args.p_min
    ));
    if args.k >= 3 {
        let mdb = derive_mdb_params(args.k, args.horizon, args.segments, args.delta, variant)
            .map_err(fail)?;
        line(format!("[mdb] variant={variant_name}"));
        line(format!("C={:.6}", mdb.log_term));
        line(format!("w={}", mdb.w));
        line(format!("b={:.6}", mdb.b));
        line(format!("c={:.6}", mdb.c));
        line(format!("gamma={:.6}", mdb.gamma));
        line(format!("raw_gamma={:.6}", mdb.raw_gamma));
        line(format!("block={}", mdb.block_len(args.k)));
        line(format!("fill_steps={}", mdb.fill_steps(args.k)));
        line(format!("separates_delta={}", mdb.separates(args.delta)));
        for w in &mdb.warnings {
            line(format!("warning={w}"));
        }
    } else {
        line("[mdb] needs K >= 3".to_string());
    }
    let det = derive_detect_params(args.horizon, delta_star).map_err(fail)?;
    line("[detect]".to_string());
    line(format!("w={}", det.w));
    line(format!("b={:.6}", det.b));
    line(format!("c={:.6}", det.c));
    line(format!("fill_steps={}", det.fill_steps(args.k)));
    line(format!(
        "separates_delta_star={}",
        det.separates(delta_star)
    ));
    line("[running_phase]".to_string());
    match detect_ttilde_btw(args.k, args.horizon, args.p_min) {
        Ok(btw) => line(format!(
            "btw_ttilde={} btw_identification={:.6e}",
            btw.ttilde, btw.identification_bound
        )),
        Err(e) => line(format!("btw_ttilde=unavailable ({e})")),
    }
    match detect_ttilde_ws(args.k, args.horizon, args.p_min) {
        Ok(ws) => line(format!(
            "ws_rounds={} ws_ttilde={} ws_identification={:.6e}",
            ws.rounds, ws.ttilde, ws.identification_bound
        )),
        Err(e) => line(format!("ws_ttilde=unavailable ({e})")),
    }
    out.write_all(text.as_bytes()).map_err(io_err)
}

fn print_bounds(args: &BoundsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (k, t, m, gap, delta) = (args.k, args.horizon, args.segments, args.gap, args.delta);
    if k < 2 || t < 3 || m < 1 {
        return Err(CliError::Usage(
            "bounds need K >= 2, T >= 3 and M >= 1".into(),
        ));
    }
    let kf = k as f64;
    let base = [("K", kf), ("T", t as f64), ("M", m as f64)];
    let with = |extra: &[(&'static str, f64)]| -> Vec<(&'static str, f64)> {
        base.iter().chain(extra).copied().collect()
    };
    let mut reports = vec![
        BoundReport::regret(
            "btwr_stationary",
            &with(&[("gap", gap)]),
            btwr_stationary_bound(k, gap),
            t,
        ),
        BoundReport::regret(
            "btwr_nonstationary",
            &with(&[("gap", gap)]),
            btwr_nonstationary_bound(k, m, t, gap),
            t,
        ),
    ];
    match weak_lower_bound(k, m, t) {
        Ok(v) => reports.push(BoundReport::regret(
            "weak_lower_bound",
            &with(&[("epsilon", lower_bound_epsilon(k, m, t))]),
            v,
            t,
        )),
        Err(e) => writeln!(out, "weak_lower_bound unavailable: {e}").map_err(io_err)?,
    }
    let r_alg = m as f64 * btwr_stationary_bound(k, gap);
    if k >= 3 {
        if let Ok(p) = derive_mdb_params(k, t, m, delta, MdbVariant::Main) {
            let fa = false_alarm_bound(t, p.b, p.w);
            let miss = delay_bound(p.w, p.c);
            reports.push(BoundReport::probability(
                "mdb_false_alarm",
                &with(&[("w", p.w as f64), ("b", p.b)]),
                fa,
            ));
            reports.push(BoundReport::probability(
                "mdb_miss",
                &with(&[("w", p.w as f64), ("c", p.c)]),
                miss,
            ));
            reports.push(BoundReport::regret(
                "mdb_regret",
                &with(&[("delta", delta), ("gamma", p.gamma), ("r_alg", r_alg)]),
                mdb_regret_bound(k, m, t, &p, fa, miss, r_alg),
                t,
            ));
        }
    }
    if let (Ok(p), Ok(phase)) = (
        derive_detect_params(t, delta),
        detect_ttilde_btw(k, t, 0.5 + gap),
    ) {
        let fa = false_alarm_bound(t, p.b, p.w);
        let miss = delay_bound(p.w, p.c);
        reports.push(BoundReport::probability(
            "detect_false_alarm",
            &with(&[("w", p.w as f64), ("b", p.b)]),
            fa,
        ));
        reports.push(BoundReport::probability(
            "detect_miss",
            &with(&[("w", p.w as f64), ("c", p.c)]),
            miss,
        ));
        reports.push(BoundReport::probability(
            "btw_identification",
            &with(&[("ttilde", phase.ttilde as f64), ("p_min", 0.5 + gap)]),
            phase.identification_bound,
        ));
        reports.push(BoundReport::regret(
            "detect_btw_regret",
            &with(&[("delta_star", delta), ("r_alg", r_alg)]),
            detect_regret_bound(k, m, t, p.w, phase.identification_bound, fa, miss, r_alg),
            t,
        ));
    }
    for r in &reports {
        let inputs: Vec<String> = r.inputs.iter().map(|(n, v)| format!("{n}={v}")).collect();
        writeln!(
            out,
            "{:<20} {:>16.6} {}{}",
            r.name,
            r.value,
            inputs.join(" "),
            if r.vacuous { " (vacuous)" } else { "" }
        )
        .map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("duelbench").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn params_prints_the_mdb_constants() {
        let cli = parse(&[
            "params", "--K", "5", "--T", "1000000", "--M", "10", "--delta", "0.6",
        ]);
        let mut buf = Vec::new();
        execute(&cli, None, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().any(|l| l == "w=424"), "{text}");
        assert!(text.lines().any(|l| l.starts_with("gamma=0.092")), "{text}");
    }

    #[test]
    fn bounds_lists_reports() {
        let cli = parse(&["bounds", "--K", "5", "--T", "1000000", "--M", "10"]);
        let mut buf = Vec::new();
        execute(&cli, None, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lb = text
            .lines()
            .find(|l| l.starts_with("weak_lower_bound"))
            .unwrap();
        assert!(lb.contains("131.76"), "{lb}");
    }

    #[test]
    fn run_without_config_is_a_usage_error() {
        let cli = parse(&["run"]);
        let err = execute(&cli, None, &mut Vec::new()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn usage_errors_from_clap() {
        let err = Cli::try_parse_from(["duelbench", "frobnicate"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = Cli::try_parse_from(["duelbench", "--parallelism", "0", "run"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
