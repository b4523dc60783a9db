use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ExperimentError;
use crate::bounds::lower_bound_matrix;
use crate::env::{NonStationaryEnvironment, PreferenceMatrix, SegmentSchedule};

/// SplitMix64 finalizer applied to `master + (index + 1)·φ`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-streams of one instance seed.
pub(crate) const GENERATOR_STREAM: u64 = 0;
pub(crate) const SAMPLER_STREAM: u64 = 1;
pub(crate) const POLICY_STREAM: u64 = 2;

/// Fills a matrix in which `winner` beats `exact` by exactly `1/2 + gap`
/// and every other arm by a uniform draw from `[1/2 + gap, 1]`; the
/// remaining pairs are uniform on `[0, 1]`. Entries in `fixed` are kept.
fn fill_matrix(
    k: usize,
    winner: usize,
    exact: Option<usize>,
    gap: f64,
    fixed: &[(usize, usize, f64)],
    rng: &mut ChaCha8Rng,
) -> Result<PreferenceMatrix, ExperimentError> {
    let mut rows = vec![vec![0.5; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let p_ij = if i == winner || j == winner {
                let other = if i == winner { j } else { i };
                let p_win = if Some(other) == exact {
                    0.5 + gap
                } else {
                    rng.random_range(0.5 + gap..=1.0)
                };
                if i == winner {
                    p_win
                } else {
                    1.0 - p_win
                }
            } else {
                rng.random::<f64>()
            };
            rows[i][j] = p_ij;
            rows[j][i] = 1.0 - p_ij;
        }
    }
    for &(i, j, p) in fixed {
        rows[i][j] = p;
        rows[j][i] = 1.0 - p;
    }
    PreferenceMatrix::new(rows).map_err(|e| ExperimentError::InfeasibleConfig(e.to_string()))
}

/// Random piecewise-stationary instance with evenly spaced changepoints.
///
/// Segment 0 picks its winner uniformly. At each changepoint the new winner
/// `k` is drawn among arms other than the old winner `m*` for which
/// `p[k][m*] + δ ≤ 1`, and `p[k][m*]` is raised by exactly `δ`; everything
/// else is redrawn, with the exact `1/2 + Δ` opponent chosen among arms
/// other than `m*` (for `K = 2` there is none and `p[k][m*]` stands alone).
pub fn generate_instance(
    k: usize,
    horizon: u64,
    segments: usize,
    gap: f64,
    change: f64,
    seed: u64,
) -> Result<NonStationaryEnvironment, ExperimentError> {
    if k < 2 {
        return Err(ExperimentError::InfeasibleConfig(format!(
            "K = {k} must be >= 2"
        )));
    }
    if !(gap > 0.0 && gap < 0.5) {
        return Err(ExperimentError::InfeasibleConfig(format!(
            "gap {gap} outside (0, 1/2)"
        )));
    }
    if segments > 1 && change < 0.5 + gap - 1e-12 {
        return Err(ExperimentError::InfeasibleConfig(format!(
            "change {change} below 1/2 + gap = {}",
            0.5 + gap
        )));
    }
    let schedule = SegmentSchedule::evenly_spaced(horizon, segments)
        .map_err(|e| ExperimentError::InfeasibleConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, GENERATOR_STREAM));
    let arms: Vec<usize> = (0..k).collect();

    let winner = rng.random_range(0..k);
    let exact = *arms
        .iter()
        .filter(|&&a| a != winner)
        .collect::<Vec<_>>()
        .choose(&mut rng)
        .copied()
        .expect("K >= 2");
    let mut matrices = vec![fill_matrix(k, winner, Some(exact), gap, &[], &mut rng)?];

    for m in 1..segments {
        let prev = &matrices[m - 1];
        let old = prev.condorcet_winner();
        let feasible: Vec<usize> = arms
            .iter()
            .copied()
            .filter(|&a| a != old && prev.prob(a, old) + change <= 1.0 + 1e-12)
            .collect();
        let Some(&new) = feasible.choose(&mut rng) else {
            return Err(ExperimentError::InfeasibleConfig(format!(
                "segment {m}: no arm can gain {change} against the old winner"
            )));
        };
        let raised = (prev.prob(new, old) + change).min(1.0);
        let candidates: Vec<usize> = arms
            .iter()
            .copied()
            .filter(|&a| a != new && a != old)
            .collect();
        let exact = candidates.choose(&mut rng).copied();
        matrices.push(fill_matrix(
            k,
            new,
            exact,
            gap,
            &[(new, old, raised)],
            &mut rng,
        )?);
    }

    NonStationaryEnvironment::new(schedule, matrices, derive_seed(seed, SAMPLER_STREAM))
        .map_err(|e| ExperimentError::InfeasibleConfig(e.to_string()))
}

/// Instance from the lower-bound family: `T/M`-step segments, segment `m`
/// using `P_{k_m}` with `k_m` uniform over arms `1..K`.
pub fn generate_lower_bound_instance(
    k: usize,
    segments: usize,
    horizon: u64,
    eps: f64,
    seed: u64,
) -> Result<NonStationaryEnvironment, ExperimentError> {
    if segments == 0 || !horizon.is_multiple_of(segments as u64) {
        return Err(ExperimentError::IndivisibleHorizon { horizon, segments });
    }
    if k < 2 {
        return Err(ExperimentError::InfeasibleConfig(format!(
            "K = {k} must be >= 2"
        )));
    }
    let len = horizon / segments as u64;
    let changepoints = (1..segments as u64).map(|m| 1 + m * len).collect();
    let schedule = SegmentSchedule::new(horizon, changepoints)
        .map_err(|e| ExperimentError::InfeasibleConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, GENERATOR_STREAM));
    let matrices = (0..segments)
        .map(|_| lower_bound_matrix(k, rng.random_range(1..k), eps))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ExperimentError::InfeasibleConfig(e.to_string()))?;
    NonStationaryEnvironment::new(schedule, matrices, derive_seed(seed, SAMPLER_STREAM))
        .map_err(|e| ExperimentError::InfeasibleConfig(e.to_string()))
}
