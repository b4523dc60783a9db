//! Closed-form regret bounds, probabilities and the lower-bound instance
//! family. Logarithms are natural throughout.

use serde::Serialize;
use thiserror::Error;

use crate::detection::MdbParams;
use crate::env::{EnvError, PreferenceMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("lower bound needs M(K-1) <= 9T, got M(K-1) = {lhs} > 9T = {rhs}")]
    ConditionViolated { lhs: u64, rhs: u64 },
    #[error("epsilon {0} outside (0, 1/4)")]
    InvalidEpsilon(f64),
    #[error("arm {arm} out of range for K = {k}")]
    InvalidArm { arm: usize, k: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// A named bound value with its inputs, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: Vec<(String, f64)>,
    pub value: f64,
    /// Set for regret bounds that exceed the horizon and so say nothing.
    pub vacuous: bool,
}

impl BoundReport {
    pub fn probability(name: &str, inputs: &[(&str, f64)], value: f64) -> Self {
        Self {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value: value.clamp(0.0, 1.0),
            vacuous: false,
        }
    }

    pub fn regret(name: &str, inputs: &[(&str, f64)], value: f64, horizon: u64) -> Self {
        Self {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value: value.max(0.0),
            vacuous: value > horizon as f64,
        }
    }
}

/// Probability that a player holding `a` units beats one holding `b` units
/// when each exchange is won with probability `p`.
pub fn gambler_ruin_win_prob(a: u64, b: u64, p: f64) -> f64 {
    if (p - 0.5).abs() < 1e-9 {
        return a as f64 / (a + b) as f64;
    }
    let x = (1.0 - p) / p;
    (1.0 - x.powf(a as f64)) / (1.0 - x.powf((a + b) as f64))
}

/// `20 K ln K / Δ²`; zero below three arms.
pub fn btwr_stationary_bound(k: usize, gap: f64) -> f64 {
    if k < 3 {
        return 0.0;
    }
    let kf = k as f64;
    20.0 * kf * kf.ln() / (gap * gap)
}

/// `21 K M ln(K + T) / Δ²`.
pub fn btwr_nonstationary_bound(k: usize, segments: usize, horizon: u64, gap: f64) -> f64 {
    let kf = k as f64;
    21.0 * kf * segments as f64 * (kf + horizon as f64).ln() / (gap * gap)
}

/// Probability of a false alarm over the horizon, `2T e^{−2b²/w}`, at most 1.
pub fn false_alarm_bound(horizon: u64, b: f64, w: usize) -> f64 {
    (2.0 * horizon as f64 * (-2.0 * b * b / w as f64).exp()).min(1.0)
}

/// Probability of missing a change of size `2b/w + c`, `e^{−wc²/2}`.
pub fn delay_bound(w: usize, c: f64) -> f64 {
    (-(w as f64) * c * c / 2.0).exp().min(1.0)
}

/// `√(T M (K−1)) / 48`, valid when `M(K−1) <= 9T`.
pub fn weak_lower_bound(k: usize, segments: usize, horizon: u64) -> Result<f64, BoundsError> {
    let lhs = segments as u64 * (k as u64 - 1);
    let rhs = 9 * horizon;
    if lhs > rhs {
        return Err(BoundsError::ConditionViolated { lhs, rhs });
    }
    Ok((horizon as f64 * lhs as f64).sqrt() / 48.0)
}

/// The `ε` that balances the lower-bound argument, `√(M(K−1)/T) / 12`.
pub fn lower_bound_epsilon(k: usize, segments: usize, horizon: u64) -> f64 {
    (segments as f64 * (k as f64 - 1.0) / horizon as f64).sqrt() / 12.0
}

/// Member `winner` of the hard instance family: `winner` beats everyone by
/// `1/2 + ε`, arm 0 beats every arm except `winner` by `1/2 + ε`, all other
/// pairs are even.
pub fn lower_bound_matrix(
    k: usize,
    winner: usize,
    eps: f64,
) -> Result<PreferenceMatrix, BoundsError> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(BoundsError::InvalidEpsilon(eps));
    }
    if winner >= k {
        return Err(BoundsError::InvalidArm { arm: winner, k });
    }
    let mut rows = vec![vec![0.5; k]; k];
    for j in 0..k {
        if j == winner {
            continue;
        }
        rows[winner][j] = 0.5 + eps;
        rows[j][winner] = 0.5 - eps;
    }
    if winner != 0 {
        for j in 1..k {
            if j == winner {
                continue;
            }
            rows[0][j] = 0.5 + eps;
            rows[j][0] = 0.5 - eps;
        }
    }
    Ok(PreferenceMatrix::new(rows)?)
}

/// `ML/2 + 2T(γK/(K−1) + p + q) + R_alg` with `L = w⌊K(K−1)/(2γ)⌋`.
pub fn mdb_regret_bound(
    k: usize,
    segments: usize,
    horizon: u64,
    params: &MdbParams,
    false_alarm: f64,
    miss: f64,
    blackbox_regret: f64,
) -> f64 {
    let kf = k as f64;
    let fill = params.fill_steps(k) as f64;
    segments as f64 * fill / 2.0
        + 2.0 * horizon as f64 * (params.gamma * kf / (kf - 1.0) + false_alarm + miss)
        + blackbox_regret
}

/// `ML'/2 + (1 − p_T̃ + p·p_T̃ + q) M T + R_alg` with `L' = w(K−1)`.
#[allow(clippy::too_many_arguments)]
pub fn detect_regret_bound(
    k: usize,
    segments: usize,
    horizon: u64,
    w: usize,
    identification: f64,
    false_alarm: f64,
    miss: f64,
    blackbox_regret: f64,
) -> f64 {
    let m = segments as f64;
    let fill = (w * (k - 1)) as f64;
    m * fill / 2.0
        + (1.0 - identification + false_alarm * identification + miss) * m * horizon as f64
        + blackbox_regret
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{derive_mdb_params, MdbVariant};

    #[test]
    fn gambler_ruin_values() {
        assert!((gambler_ruin_win_prob(1, 1, 0.75) - 0.75).abs() < 1e-12);
        assert!((gambler_ruin_win_prob(2, 1, 2.0 / 3.0) - 6.0 / 7.0).abs() < 1e-12);
        assert_eq!(gambler_ruin_win_prob(3, 5, 0.5), 3.0 / 8.0);
        assert!((gambler_ruin_win_prob(3, 5, 0.5 + 1e-10) - 3.0 / 8.0).abs() < 1e-9);
    }

    #[test]
    fn gambler_ruin_is_complementary() {
        for &(a, b) in &[(1, 1), (2, 5), (7, 3), (10, 10)] {
            for &p in &[0.1, 0.3, 0.5, 0.6, 0.9] {
                let s = gambler_ruin_win_prob(a, b, p) + gambler_ruin_win_prob(b, a, 1.0 - p);
                assert!((s - 1.0).abs() < 1e-12, "a={a} b={b} p={p}");
            }
        }
    }

    #[test]
    fn btwr_bounds() {
        assert!((btwr_stationary_bound(5, 0.2) - 4023.594781).abs() < 1e-3);
        assert!((btwr_stationary_bound(3, 0.5) - 263.666949).abs() < 1e-6);
        assert_eq!(btwr_stationary_bound(2, 0.2), 0.0);
        let ns = btwr_nonstationary_bound(10, 10, 1_000_000, 0.1);
        assert!((ns / 2.90e6 - 1.0).abs() < 1e-2, "{ns}");
        let m1 = btwr_nonstationary_bound(4, 1, 1000, 0.2);
        assert!((m1 - 21.0 * 4.0 * (1004.0f64).ln() / 0.04).abs() < 1e-9);
        assert!(btwr_nonstationary_bound(4, 2, 1000, 0.2) > m1);
        assert!(btwr_nonstationary_bound(4, 1, 2000, 0.2) > m1);
    }

    #[test]
    fn alarm_probabilities() {
        let (t, w) = (1000u64, 200usize);
        let b = (2.0 * w as f64 * (t as f64).ln()).sqrt();
        let fa = false_alarm_bound(t, b, w);
        assert!((fa - 2.0 / (t as f64).powi(3)).abs() < 1e-18);
        assert_eq!(delay_bound(w, 0.0), 1.0);
        assert!((false_alarm_bound(1, 20.0, 200) - 2.0 * (-4.0f64).exp()).abs() < 1e-15);
        assert!((false_alarm_bound(1, 20.0, 200) - 0.0366).abs() < 1e-4);
        assert_eq!(false_alarm_bound(1_000_000, 1.0, 200), 1.0);
    }

    #[test]
    fn lower_bound_values() {
        assert!((weak_lower_bound(5, 10, 1_000_000).unwrap() - 131.76).abs() < 1e-2);
        assert!((weak_lower_bound(2, 1, 2304).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            weak_lower_bound(11, 10, 10),
            Err(BoundsError::ConditionViolated { lhs: 100, rhs: 90 })
        ));
    }

    #[test]
    fn lower_bound_family() {
        let p1 = lower_bound_matrix(3, 0, 0.1).unwrap();
        let expected = [[0.5, 0.6, 0.6], [0.4, 0.5, 0.5], [0.4, 0.5, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((p1.prob(i, j) - expected[i][j]).abs() < 1e-12);
            }
        }
        let p2 = lower_bound_matrix(3, 1, 0.1).unwrap();
        assert_eq!(p2.condorcet_winner(), 1);
        assert!((p2.prob(1, 0) - 0.6).abs() < 1e-12);
        assert!((p2.prob(0, 2) - 0.6).abs() < 1e-12);
        assert_eq!(lower_bound_matrix(4, 0, 0.1).unwrap().condorcet_winner(), 0);
        assert_eq!(lower_bound_matrix(4, 2, 0.1).unwrap().condorcet_winner(), 2);
        let g = lower_bound_matrix(4, 0, 0.15).unwrap();
        assert!(g.gaps()[1..].iter().all(|&d| (d - 0.15).abs() < 1e-12));
        assert!(lower_bound_matrix(3, 0, 0.25).is_err());
        assert!(lower_bound_matrix(3, 3, 0.1).is_err());
        assert!((lower_bound_epsilon(5, 10, 1_000_000) - (4e-5f64).sqrt() / 12.0).abs() < 1e-15);
    }

    #[test]
    fn regret_bound_limits() {
        let mut params = derive_mdb_params(5, 100_000, 5, 0.6, MdbVariant::Main).unwrap();
        params.gamma = 1e-12;
        let l = params.fill_steps(5) as f64;
        let b = mdb_regret_bound(5, 5, 100_000, &params, 0.0, 0.0, 0.0);
        assert!((b - 5.0 * l / 2.0).abs() / b < 1e-6);

        let d = detect_regret_bound(5, 4, 10_000, 100, 1.0, 0.0, 0.0, 17.0);
        assert_eq!(d, 4.0 * 400.0 / 2.0 + 17.0);
    }

    #[test]
    fn mdb_bound_grows_like_sqrt_t_log() {
        // bound at the derived constants, with p and q from the window tail bounds
        let eval = |t: u64| {
            let p = derive_mdb_params(5, t, 10, 0.6, MdbVariant::Main).unwrap();
            let fa = false_alarm_bound(t, p.b, p.w);
            let miss = delay_bound(p.w, p.c);
            (mdb_regret_bound(5, 10, t, &p, fa, miss, 0.0), p.log_term)
        };
        let (b4, c4) = eval(10_000);
        let (b5, c5) = eval(100_000);
        let (b6, c6) = eval(1_000_000);
        for ((lo, clo), (hi, chi)) in [((b4, c4), (b5, c5)), ((b5, c5), (b6, c6))] {
            let predicted = 10f64.sqrt() * (chi / clo).sqrt();
            let ratio = hi / lo;
            assert!(
                (ratio / predicted - 1.0).abs() < 0.1,
                "{ratio} vs {predicted}"
            );
        }
    }
}
