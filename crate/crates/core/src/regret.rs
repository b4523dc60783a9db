//! Strong/weak regret, their binary variants, and the per-pair play counts
//! that decompose a cumulative regret over segments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{NonStationaryEnvironment, PreferenceMatrix};

/// Default number of evenly spaced checkpoints (the horizon is always added).
pub const DEFAULT_CHECKPOINTS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegretError {
    #[error("time step {t} recorded after step {last}")]
    NonMonotoneTime { t: u64, last: u64 },
    #[error("unknown regret kind `{0}` (expected strong, weak, binary_strong or binary_weak)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegretBase {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RegretKind {
    pub base: RegretBase,
    pub binary: bool,
}

impl RegretKind {
    pub const STRONG: Self = Self {
        base: RegretBase::Strong,
        binary: false,
    };
    pub const WEAK: Self = Self {
        base: RegretBase::Weak,
        binary: false,
    };
    pub const BINARY_STRONG: Self = Self {
        base: RegretBase::Strong,
        binary: true,
    };
    pub const BINARY_WEAK: Self = Self {
        base: RegretBase::Weak,
        binary: true,
    };

    pub const ALL: [Self; 4] = [
        Self::STRONG,
        Self::WEAK,
        Self::BINARY_STRONG,
        Self::BINARY_WEAK,
    ];
}

impl fmt::Display for RegretKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.base {
            RegretBase::Strong => "strong",
            RegretBase::Weak => "weak",
        };
        if self.binary {
            write!(f, "binary_{base}")
        } else {
            f.write_str(base)
        }
    }
}

impl FromStr for RegretKind {
    type Err = RegretError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| RegretError::UnknownKind(s.to_string()))
    }
}

impl TryFrom<String> for RegretKind {
    type Error = RegretError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<RegretKind> for String {
    fn from(k: RegretKind) -> Self {
        k.to_string()
    }
}

/// Regret of playing `(i, j)` against matrix `m`.
///
/// Strong is the mean of the two gaps, weak the smaller one; the binary
/// variants round up, so they are 0 exactly when the base value is 0.
#[inline]
pub fn instant_regret(kind: RegretKind, m: &PreferenceMatrix, i: usize, j: usize) -> f64 {
    let (gi, gj) = (m.gap(i), m.gap(j));
    let value = match kind.base {
        RegretBase::Strong => (gi + gj) / 2.0,
        RegretBase::Weak => gi.min(gj),
    };
    if kind.binary {
        value.ceil()
    } else {
        value
    }
}

/// `n` evenly spaced steps `⌊c·T/n⌋` plus `T`, deduplicated and without 0.
pub fn checkpoint_grid(horizon: u64, n: usize) -> Vec<u64> {
    let n = n.max(1) as u128;
    let mut grid: Vec<u64> = (1..=n)
        .map(|c| (c * horizon as u128 / n) as u64)
        .filter(|&t| t > 0)
        .collect();
    grid.push(horizon);
    grid.dedup();
    grid
}

/// Running cumulative regret of one run.
#[derive(Debug, Clone)]
pub struct RegretTracker {
    kind: RegretKind,
    k: usize,
    segments: usize,
    cumulative: f64,
    counts: Vec<u64>,
    grid: Vec<u64>,
    next_checkpoint: usize,
    checkpoints: Vec<(u64, f64)>,
    last_t: u64,
    steps: u64,
}

impl RegretTracker {
    pub fn new(kind: RegretKind, k: usize, segments: usize, grid: Vec<u64>) -> Self {
        Self {
            kind,
            k,
            segments,
            cumulative: 0.0,
            counts: vec![0; segments * k * k],
            checkpoints: Vec::with_capacity(grid.len()),
            grid,
            next_checkpoint: 0,
            last_t: 0,
            steps: 0,
        }
    }

    /// Tracker sized for `env` with the default checkpoint grid.
    pub fn for_env(kind: RegretKind, env: &NonStationaryEnvironment) -> Self {
        Self::new(
            kind,
            env.k(),
            env.schedule().num_segments(),
            checkpoint_grid(env.horizon(), DEFAULT_CHECKPOINTS),
        )
    }

    pub fn kind(&self) -> RegretKind {
        self.kind
    }

    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn checkpoints(&self) -> &[(u64, f64)] {
        &self.checkpoints
    }

    pub fn into_checkpoints(self) -> Vec<(u64, f64)> {
        self.checkpoints
    }

    /// Times `(i, j)` was played (in this order) during segment `m`.
    pub fn count(&self, m: usize, i: usize, j: usize) -> u64 {
        self.counts[(m * self.k + i) * self.k + j]
    }

    pub fn record(
        &mut self,
        t: u64,
        segment: usize,
        i: usize,
        j: usize,
        value: f64,
    ) -> Result<(), RegretError> {
        if t <= self.last_t {
            return Err(RegretError::NonMonotoneTime {
                t,
                last: self.last_t,
            });
        }
        self.last_t = t;
        self.steps += 1;
        self.cumulative += value;
        self.counts[(segment * self.k + i) * self.k + j] += 1;
        while self.next_checkpoint < self.grid.len() && self.grid[self.next_checkpoint] <= t {
            let at = self.grid[self.next_checkpoint];
            // a skipped grid step can only happen if the caller skipped steps
            self.checkpoints.push((at, self.cumulative));
            self.next_checkpoint += 1;
        }
        Ok(())
    }

    /// Recomputes the cumulative regret from the per-pair counts and compares
    /// it with the running total (relative tolerance 1e-6).
    pub fn decomposition_check(&self, env: &NonStationaryEnvironment) -> bool {
        if env.k() != self.k || env.schedule().num_segments() != self.segments {
            return false;
        }
        let mut total = 0.0;
        for m in 0..self.segments {
            let matrix = env.matrix(m);
            for i in 0..self.k {
                for j in 0..self.k {
                    let n = self.count(m, i, j);
                    if n > 0 {
                        total += n as f64 * instant_regret(self.kind, matrix, i, j);
                    }
                }
            }
        }
        let scale = total.abs().max(self.cumulative.abs());
        (total - self.cumulative).abs() <= 1e-6 * scale
    }

    #[cfg(test)]
    pub(crate) fn tamper_count(&mut self, m: usize, i: usize, j: usize, delta: i64) {
        let idx = (m * self.k + i) * self.k + j;
        self.counts[idx] = (self.counts[idx] as i64 + delta) as u64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SegmentSchedule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Winner 0 with gaps 0.2 (arm 1) and 0.4 (arm 2).
    fn matrix() -> PreferenceMatrix {
        PreferenceMatrix::new(vec![
            vec![0.5, 0.7, 0.9],
            vec![0.3, 0.5, 0.6],
            vec![0.1, 0.4, 0.5],
        ])
        .unwrap()
    }

    #[test]
    fn regret_values() {
        let m = matrix();
        for kind in RegretKind::ALL {
            assert_eq!(instant_regret(kind, &m, 0, 0), 0.0);
        }
        assert_eq!(instant_regret(RegretKind::WEAK, &m, 0, 2), 0.0);
        assert_eq!(instant_regret(RegretKind::BINARY_WEAK, &m, 1, 0), 0.0);
        assert_eq!(instant_regret(RegretKind::BINARY_STRONG, &m, 1, 2), 1.0);
        assert!((instant_regret(RegretKind::STRONG, &m, 1, 2) - 0.3).abs() < 1e-12);
        assert!((instant_regret(RegretKind::WEAK, &m, 1, 2) - 0.2).abs() < 1e-12);
        assert_eq!(instant_regret(RegretKind::BINARY_STRONG, &m, 0, 2), 1.0);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in RegretKind::ALL {
            assert_eq!(kind.to_string().parse::<RegretKind>(), Ok(kind));
        }
        assert!("regret".parse::<RegretKind>().is_err());
    }

    #[test]
    fn grid_has_horizon_and_no_duplicates() {
        let g = checkpoint_grid(1000, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 5);
        assert_eq!(*g.last().unwrap(), 1000);
        let g = checkpoint_grid(50, 200);
        assert_eq!(g, (1..=50).collect::<Vec<_>>());
        let g = checkpoint_grid(1001, 200);
        assert_eq!(*g.last().unwrap(), 1001);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn record_accumulates() {
        let mut tr = RegretTracker::new(RegretKind::STRONG, 3, 1, checkpoint_grid(10, 5));
        tr.record(1, 0, 0, 0, 0.0).unwrap();
        assert_eq!(tr.cumulative(), 0.0);
        assert_eq!(tr.count(0, 0, 0), 1);
        tr.record(2, 0, 1, 2, 0.3).unwrap();
        tr.record(3, 0, 1, 2, 0.3).unwrap();
        assert!((tr.cumulative() - 0.6).abs() < 1e-15);
        assert_eq!(tr.checkpoints(), &[(2, 0.3)]);
        assert_eq!(
            tr.record(3, 0, 0, 0, 0.0),
            Err(RegretError::NonMonotoneTime { t: 3, last: 3 })
        );
    }

    #[test]
    fn cumulative_matches_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let values: Vec<f64> = (0..100).map(|_| rng.random()).collect();
        let mut tr = RegretTracker::new(RegretKind::STRONG, 2, 1, checkpoint_grid(100, 10));
        for (t, &v) in values.iter().enumerate() {
            tr.record(t as u64 + 1, 0, 0, 1, v).unwrap();
        }
        let oracle: f64 = values.iter().sum();
        assert!((tr.cumulative() - oracle).abs() < 1e-9);
        assert_eq!(tr.checkpoints().len(), 10);
        assert!(tr.checkpoints().windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn decomposition_identity() {
        let s = SegmentSchedule::new(1000, vec![400]).unwrap();
        let m2 = PreferenceMatrix::new(vec![
            vec![0.5, 0.2, 0.3],
            vec![0.8, 0.5, 0.9],
            vec![0.7, 0.1, 0.5],
        ])
        .unwrap();
        let env = NonStationaryEnvironment::new(s, vec![matrix(), m2], 0).unwrap();

        let empty = RegretTracker::for_env(RegretKind::STRONG, &env);
        assert!(empty.decomposition_check(&env));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in RegretKind::ALL {
            let mut tr = RegretTracker::for_env(kind, &env);
            for t in 1..=1000u64 {
                let (i, j) = (rng.random_range(0..3), rng.random_range(0..3));
                let seg = env.schedule().segment_of(t).unwrap();
                let v = instant_regret(kind, env.matrix(seg), i, j);
                tr.record(t, seg, i, j, v).unwrap();
            }
            assert!(tr.decomposition_check(&env), "{kind}");
            tr.tamper_count(1, 0, 2, 1);
            assert!(!tr.decomposition_check(&env), "{kind} tampered");
        }
    }
}
