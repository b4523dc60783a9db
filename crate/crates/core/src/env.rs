//! Preference matrices, segment schedules and the seeded duel sampler.
//!
//! Time steps are 1-based (`1..=T`) as in the problem statement; arm and
//! segment indices are 0-based.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `p[i][j] + p[j][i] = 1` when a matrix is validated.
pub const COMPLEMENTARITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("preference matrix needs at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("preference matrix is not square: row {row} has {len} entries, expected {k}")]
    NotSquare { row: usize, len: usize, k: usize },
    #[error("entry p[{i}][{j}] = {value} is outside [0, 1]")]
    EntryOutOfRange { i: usize, j: usize, value: f64 },
    #[error("p[{i}][{j}] + p[{j}][{i}] = {sum}, expected 1")]
    ComplementarityViolation { i: usize, j: usize, sum: f64 },
    #[error("no arm beats every other arm with probability > 1/2")]
    NoCondorcetWinner,
    #[error("invalid segment schedule: {0}")]
    InvalidSchedule(String),
    #[error("time step {t} outside 1..={horizon}")]
    StepOutOfRange { t: u64, horizon: u64 },
    #[error("arm {arm} out of range for K = {k}")]
    ArmOutOfRange { arm: usize, k: usize },
    #[error("environment has {matrices} matrices for {segments} segments")]
    SegmentCountMismatch { matrices: usize, segments: usize },
    #[error("all matrices must share K = {expected}, segment {segment} has K = {found}")]
    ArmCountMismatch {
        segment: usize,
        expected: usize,
        found: usize,
    },
    #[error("segmental changes need at least two segments")]
    SingleSegment,
}

/// A validated K×K win-probability matrix with a Condorcet winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixDoc", into = "MatrixDoc")]
pub struct PreferenceMatrix {
    k: usize,
    p: Vec<f64>,
    winner: usize,
    gaps: Vec<f64>,
}

/// Plain document form of a matrix (`k`, `rows`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
}

impl TryFrom<MatrixDoc> for PreferenceMatrix {
    type Error = EnvError;

    fn try_from(doc: MatrixDoc) -> Result<Self, Self::Error> {
        if doc.rows.len() != doc.k {
            return Err(EnvError::NotSquare {
                row: doc.rows.len(),
                len: doc.rows.len(),
                k: doc.k,
            });
        }
        PreferenceMatrix::new(doc.rows)
    }
}

impl From<PreferenceMatrix> for MatrixDoc {
    fn from(m: PreferenceMatrix) -> Self {
        MatrixDoc {
            k: m.k,
            rows: m.rows(),
        }
    }
}

impl PreferenceMatrix {
    /// Validates `rows` and stores the matrix with exact complementarity
    /// (`p[j][i] := 1 - p[i][j]` for `i < j`, diagonal `1/2`).
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, EnvError> {
        let k = rows.len();
        if k < 2 {
            return Err(EnvError::TooFewArms(k));
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(EnvError::NotSquare {
                    row,
                    len: r.len(),
                    k,
                });
            }
            for (j, &value) in r.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(EnvError::EntryOutOfRange { i: row, j, value });
                }
            }
        }
        for i in 0..k {
            for j in i..k {
                let sum = rows[i][j] + rows[j][i];
                if (sum - 1.0).abs() > COMPLEMENTARITY_TOL {
                    return Err(EnvError::ComplementarityViolation { i, j, sum });
                }
            }
        }

        let mut p = vec![0.5; k * k];
        for i in 0..k {
            for j in (i + 1)..k {
                p[i * k + j] = rows[i][j];
                p[j * k + i] = 1.0 - rows[i][j];
            }
        }

        let winner = (0..k)
            .find(|&i| (0..k).all(|j| j == i || p[i * k + j] > 0.5))
            .ok_or(EnvError::NoCondorcetWinner)?;
        let gaps = (0..k)
            .map(|i| {
                if i == winner {
                    0.0
                } else {
                    p[winner * k + i] - 0.5
                }
            })
            .collect();

        Ok(Self { k, p, winner, gaps })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Probability that arm `i` beats arm `j`.
    #[inline]
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.k + j]
    }

    pub fn condorcet_winner(&self) -> usize {
        self.winner
    }

    /// Per-arm suboptimality gaps `p[winner][i] - 1/2` (zero for the winner).
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    #[inline]
    pub fn gap(&self, arm: usize) -> f64 {
        self.gaps[arm]
    }

    /// Smallest gap over the non-winning arms.
    pub fn min_gap(&self) -> f64 {
        self.gaps
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.winner)
            .map(|(_, &g)| g)
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest winning probability of the Condorcet winner, `1/2 + min_gap`.
    pub fn min_winner_prob(&self) -> f64 {
        (0..self.k)
            .filter(|&j| j != self.winner)
            .map(|j| self.prob(self.winner, j))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.k).map(<[f64]>::to_vec).collect()
    }
}

/// Changepoints `ν_1 < … < ν_{M-1}` over the horizon `1..=T`.
///
/// Segment `m` (0-based) covers `starts[m]..starts[m+1]` where the implicit
/// bounds are `ν_0 = 1` and `ν_M = T + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleDoc", into = "ScheduleDoc")]
pub struct SegmentSchedule {
    horizon: u64,
    /// `ν_0 ..= ν_M`, length M + 1.
    bounds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleDoc {
    pub horizon: u64,
    pub changepoints: Vec<u64>,
}

impl TryFrom<ScheduleDoc> for SegmentSchedule {
    type Error = EnvError;

    fn try_from(doc: ScheduleDoc) -> Result<Self, Self::Error> {
        SegmentSchedule::new(doc.horizon, doc.changepoints)
    }
}

impl From<SegmentSchedule> for ScheduleDoc {
    fn from(s: SegmentSchedule) -> Self {
        ScheduleDoc {
            horizon: s.horizon,
            changepoints: s.changepoints().to_vec(),
        }
    }
}

impl SegmentSchedule {
    pub fn new(horizon: u64, changepoints: Vec<u64>) -> Result<Self, EnvError> {
        if horizon == 0 {
            return Err(EnvError::InvalidSchedule("horizon must be >= 1".into()));
        }
        let mut bounds = Vec::with_capacity(changepoints.len() + 2);
        bounds.push(1);
        for &nu in &changepoints {
            let prev = *bounds.last().unwrap();
            if nu <= prev {
                return Err(EnvError::InvalidSchedule(format!(
                    "changepoint {nu} must exceed {prev}"
                )));
            }
            if nu > horizon {
                return Err(EnvError::InvalidSchedule(format!(
                    "changepoint {nu} beyond horizon {horizon}"
                )));
            }
            bounds.push(nu);
        }
        bounds.push(horizon + 1);
        Ok(Self { horizon, bounds })
    }

    pub fn stationary(horizon: u64) -> Result<Self, EnvError> {
        Self::new(horizon, Vec::new())
    }

    /// `segments` segments of (near) equal length: `ν_m = 1 + ⌊m·T/M⌋`.
    pub fn evenly_spaced(horizon: u64, segments: usize) -> Result<Self, EnvError> {
        if segments == 0 {
            return Err(EnvError::InvalidSchedule(
                "need at least one segment".into(),
            ));
        }
        let m = segments as u128;
        let changepoints = (1..m)
            .map(|i| 1 + (i * horizon as u128 / m) as u64)
            .collect();
        Self::new(horizon, changepoints)
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn num_segments(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn changepoints(&self) -> &[u64] {
        &self.bounds[1..self.bounds.len() - 1]
    }

    /// First step of segment `m` and one past its last step.
    pub fn segment_range(&self, m: usize) -> (u64, u64) {
        (self.bounds[m], self.bounds[m + 1])
    }

    pub fn segment_len(&self, m: usize) -> u64 {
        self.bounds[m + 1] - self.bounds[m]
    }

    /// The segment containing step `t`.
    pub fn segment_of(&self, t: u64) -> Result<usize, EnvError> {
        if t == 0 || t > self.horizon {
            return Err(EnvError::StepOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        // number of bounds <= t, minus the ν_0 entry
        Ok(self.bounds.partition_point(|&b| b <= t) - 1)
    }
}

/// One observed duel; `won` is true when arm `i` beat arm `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DuelOutcome {
    pub t: u64,
    pub i: usize,
    pub j: usize,
    pub won: bool,
}

/// Segment schedule, one matrix per segment and a private sampling stream.
#[derive(Debug, Clone)]
pub struct NonStationaryEnvironment {
    schedule: SegmentSchedule,
    matrices: Vec<PreferenceMatrix>,
    seed: u64,
    rng: ChaCha8Rng,
}

/// Serializable description of an environment; the sampler restarts from
/// `seed` when rebuilt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentDoc {
    pub schedule: SegmentSchedule,
    pub matrices: Vec<PreferenceMatrix>,
    pub seed: u64,
}

impl NonStationaryEnvironment {
    pub fn new(
        schedule: SegmentSchedule,
        matrices: Vec<PreferenceMatrix>,
        seed: u64,
    ) -> Result<Self, EnvError> {
        if matrices.len() != schedule.num_segments() {
            return Err(EnvError::SegmentCountMismatch {
                matrices: matrices.len(),
                segments: schedule.num_segments(),
            });
        }
        let k = matrices[0].k();
        if let Some((segment, m)) = matrices.iter().enumerate().find(|(_, m)| m.k() != k) {
            return Err(EnvError::ArmCountMismatch {
                segment,
                expected: k,
                found: m.k(),
            });
        }
        Ok(Self {
            schedule,
            matrices,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn stationary(matrix: PreferenceMatrix, horizon: u64, seed: u64) -> Result<Self, EnvError> {
        Self::new(SegmentSchedule::stationary(horizon)?, vec![matrix], seed)
    }

    pub fn from_doc(doc: EnvironmentDoc) -> Result<Self, EnvError> {
        Self::new(doc.schedule, doc.matrices, doc.seed)
    }

    pub fn to_doc(&self) -> EnvironmentDoc {
        EnvironmentDoc {
            schedule: self.schedule.clone(),
            matrices: self.matrices.clone(),
            seed: self.seed,
        }
    }

    pub fn k(&self) -> usize {
        self.matrices[0].k()
    }

    pub fn horizon(&self) -> u64 {
        self.schedule.horizon()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn schedule(&self) -> &SegmentSchedule {
        &self.schedule
    }

    pub fn matrices(&self) -> &[PreferenceMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, segment: usize) -> &PreferenceMatrix {
        &self.matrices[segment]
    }

    /// Matrix in force at step `t`.
    pub fn matrix_at(&self, t: u64) -> Result<&PreferenceMatrix, EnvError> {
        Ok(&self.matrices[self.schedule.segment_of(t)?])
    }

    /// Smallest gap over all segments.
    pub fn min_gap(&self) -> f64 {
        self.matrices
            .iter()
            .map(PreferenceMatrix::min_gap)
            .fold(f64::INFINITY, f64::min)
    }

    /// Restarts the sampling stream from the stored seed.
    pub fn rewind(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
    }

    /// Draws the outcome of `i` vs `j` at step `t`; consumes one uniform.
    pub fn sample_duel(&mut self, t: u64, i: usize, j: usize) -> Result<DuelOutcome, EnvError> {
        let segment = self.schedule.segment_of(t)?;
        self.sample_in_segment(segment, t, i, j)
    }

    /// Same as [`sample_duel`](Self::sample_duel) with the segment already
    /// known to the caller.
    pub fn sample_in_segment(
        &mut self,
        segment: usize,
        t: u64,
        i: usize,
        j: usize,
    ) -> Result<DuelOutcome, EnvError> {
        let m = &self.matrices[segment];
        let k = m.k();
        for arm in [i, j] {
            if arm >= k {
                return Err(EnvError::ArmOutOfRange { arm, k });
            }
        }
        let u: f64 = self.rng.random();
        Ok(DuelOutcome {
            t,
            i,
            j,
            won: u < m.prob(i, j),
        })
    }
}

/// Changes between consecutive segments.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentalChanges {
    /// `(δ^(m), δ*^(m))` for each changepoint.
    pub per_changepoint: Vec<(f64, f64)>,
    /// Minimum of `δ^(m)`.
    pub delta: f64,
    /// Minimum of `δ*^(m)`.
    pub delta_star: f64,
}

/// Largest entrywise change at each changepoint, overall and restricted to
/// the outgoing segment's Condorcet winner row.
pub fn segmental_changes(env: &NonStationaryEnvironment) -> Result<SegmentalChanges, EnvError> {
    let ms = env.matrices();
    if ms.len() < 2 {
        return Err(EnvError::SingleSegment);
    }
    let k = env.k();
    let per_changepoint: Vec<(f64, f64)> = ms
        .windows(2)
        .map(|pair| {
            let (old, new) = (&pair[0], &pair[1]);
            let mut overall = 0.0f64;
            for i in 0..k {
                for j in 0..k {
                    overall = overall.max((new.prob(i, j) - old.prob(i, j)).abs());
                }
            }
            let w = old.condorcet_winner();
            let winner_row = (0..k)
                .map(|j| (new.prob(w, j) - old.prob(w, j)).abs())
                .fold(0.0f64, f64::max);
            (overall, winner_row)
        })
        .collect();
    let delta = per_changepoint
        .iter()
        .map(|c| c.0)
        .fold(f64::INFINITY, f64::min);
    let delta_star = per_changepoint
        .iter()
        .map(|c| c.1)
        .fold(f64::INFINITY, f64::min);
    Ok(SegmentalChanges {
        per_changepoint,
        delta,
        delta_star,
    })
}
