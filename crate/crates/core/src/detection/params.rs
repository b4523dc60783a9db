//! Window sizes, thresholds and phase lengths derived from the horizon and
//! the problem's change magnitudes.

use serde::{Deserialize, Serialize};

use super::DetectionError;

/// Smallest even integer `>= x`, and at least 2.
pub fn smallest_even_at_least(x: f64) -> usize {
    let n = x.ceil().max(2.0) as usize;
    n + n % 2
}

/// Which log term to use for the MDB constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MdbVariant {
    /// `C = ln(√(2T)(2T+1) / (√M K))`.
    #[default]
    Main,
    /// Same with an extra factor `δ` inside the logarithm.
    DeltaScaled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdbParams {
    /// The log term `C`.
    pub log_term: f64,
    pub w: usize,
    pub b: f64,
    pub c: f64,
    pub gamma: f64,
    /// `γ` before clamping into `[K(K−1)/(2T), (K−1)/2] ∩ (0, 1]`.
    pub raw_gamma: f64,
    pub warnings: Vec<String>,
}

impl MdbParams {
    /// Steps between the starts of two detection blocks, `⌊K(K−1)/(2γ)⌋`.
    pub fn block_len(&self, k: usize) -> u64 {
        block_len(k, self.gamma)
    }

    /// `L = w·⌊K(K−1)/(2γ)⌋`, the steps needed to fill every window.
    pub fn fill_steps(&self, k: usize) -> u64 {
        self.w as u64 * self.block_len(k)
    }

    /// Whether `delta >= 2b/w + c`.
    pub fn separates(&self, delta: f64) -> bool {
        delta >= 2.0 * self.b / self.w as f64 + self.c - 1e-12
    }

    pub fn gamma_clamped(&self) -> bool {
        self.gamma != self.raw_gamma
    }
}

pub fn block_len(k: usize, gamma: f64) -> u64 {
    ((k * (k - 1)) as f64 / (2.0 * gamma)).floor() as u64
}

pub fn derive_mdb_params(
    k: usize,
    horizon: u64,
    segments: usize,
    delta: f64,
    variant: MdbVariant,
) -> Result<MdbParams, DetectionError> {
    if k < 3 {
        return Err(DetectionError::InvalidInput(format!(
            "MDB needs K >= 3, got {k}"
        )));
    }
    if horizon < 1 || segments < 1 {
        return Err(DetectionError::InvalidInput("T and M must be >= 1".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(DetectionError::InvalidInput(format!(
            "segmental change {delta} outside (0, 1]"
        )));
    }
    let t = horizon as f64;
    let kf = k as f64;
    let mut arg = (2.0 * t).sqrt() * (2.0 * t + 1.0) / ((segments as f64).sqrt() * kf);
    if variant == MdbVariant::DeltaScaled {
        arg *= delta;
    }
    let log_term = arg.ln();
    if log_term.is_nan() || log_term <= 0.0 {
        return Err(DetectionError::InfeasibleHorizon(format!(
            "log term C = {log_term} is not positive"
        )));
    }
    let w = smallest_even_at_least(8.0 * log_term / (delta * delta));
    let wf = w as f64;
    let b = (wf * log_term / 2.0).sqrt();
    let c = (2.0 * log_term / wf).sqrt();
    let raw_gamma = (kf - 1.0) * (segments as f64 * wf / (8.0 * t)).sqrt();
    let lo = kf * (kf - 1.0) / (2.0 * t);
    let hi = ((kf - 1.0) / 2.0).min(1.0);
    if lo > hi {
        return Err(DetectionError::InfeasibleHorizon(format!(
            "exploration-rate range [{lo}, {hi}] is empty"
        )));
    }
    let gamma = raw_gamma.clamp(lo, hi);
    let mut warnings = Vec::new();
    if gamma != raw_gamma {
        warnings.push(format!(
            "gamma {raw_gamma:.6} clamped to {gamma:.6} (allowed range [{lo:.6}, {hi:.6}])"
        ));
    }
    Ok(MdbParams {
        log_term,
        w,
        b,
        c,
        gamma,
        raw_gamma,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectParams {
    pub w: usize,
    pub b: f64,
    pub c: f64,
}

impl DetectParams {
    /// `L' = w(K−1)`.
    pub fn fill_steps(&self, k: usize) -> u64 {
        (self.w * (k - 1)) as u64
    }

    pub fn separates(&self, delta_star: f64) -> bool {
        delta_star >= 2.0 * self.b / self.w as f64 + self.c - 1e-12
    }
}

/// `w` = smallest even integer `>= 32 ln T / δ*²`, `b = √(2w ln T)`,
/// `c = √(8 ln T / w)`.
pub fn derive_detect_params(horizon: u64, delta_star: f64) -> Result<DetectParams, DetectionError> {
    if horizon < 2 {
        return Err(DetectionError::InvalidInput("T must be >= 2".into()));
    }
    if !(delta_star > 0.0 && delta_star <= 1.0) {
        return Err(DetectionError::InvalidInput(format!(
            "winner change {delta_star} outside (0, 1]"
        )));
    }
    detect_params_from_log(horizon as f64, delta_star)
}

fn detect_params_from_log(t: f64, delta_star: f64) -> Result<DetectParams, DetectionError> {
    let log_t = t.ln();
    let w = smallest_even_at_least(32.0 * log_t / (delta_star * delta_star));
    let wf = w as f64;
    Ok(DetectParams {
        w,
        b: (2.0 * wf * log_t).sqrt(),
        c: (8.0 * log_t / wf).sqrt(),
    })
}

fn check_winner_prob(p: f64, allow_one: bool) -> Result<(), DetectionError> {
    let ok = p > 0.5 && (p < 1.0 || (allow_one && p == 1.0));
    if ok {
        Ok(())
    } else {
        Err(DetectionError::InvalidProbability(p))
    }
}

/// Lower bound on the probability that BtW's incumbent after `ttilde` steps
/// is the Condorcet winner; needs `ttilde >= K²`.
pub fn btw_identification_bound(k: usize, ttilde: f64, p_min: f64) -> Result<f64, DetectionError> {
    check_winner_prob(p_min, true)?;
    let kf = k as f64;
    if ttilde < kf * kf {
        return Err(DetectionError::TooSmallHorizon { ttilde, k });
    }
    let s = (2.0 * p_min - 1.0).powi(2);
    let tail = (-(ttilde.sqrt() - kf + 1.0) * s).exp() / (1.0 - (-s).exp());
    Ok((1.0 - tail).clamp(0.0, 1.0))
}

/// Lower bound on the probability that WS's last round winner after
/// `ttilde` steps is the Condorcet winner, given round count `rounds >= 2`.
pub fn ws_identification_bound(
    k: usize,
    rounds: u64,
    ttilde: f64,
    p_min: f64,
) -> Result<f64, DetectionError> {
    check_winner_prob(p_min, true)?;
    let x = (1.0 - p_min) / p_min;
    let r = rounds as f64;
    let kf = k as f64;
    let bound = 1.0 - (1.0 + x / (1.0 - x)) * x.powf(r) - r.powi(3) * kf.powi(3) / ttilde;
    Ok(bound.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BtwPhaseLength {
    pub ttilde: u64,
    pub identification_bound: f64,
}

/// Running-phase length for DETECT with BtW as the black box.
pub fn detect_ttilde_btw(
    k: usize,
    horizon: u64,
    p_min: f64,
) -> Result<BtwPhaseLength, DetectionError> {
    check_winner_prob(p_min, true)?;
    if horizon < 3 {
        return Err(DetectionError::InvalidInput("T must be >= 3".into()));
    }
    let t = horizon as f64;
    let s = (2.0 * p_min - 1.0).powi(2);
    let q = 1.0 - (-s).exp();
    let root = (t / (q * t.ln())).ln() / s + k as f64 - 1.0;
    let ttilde = (root * root).ceil();
    if !ttilde.is_finite() || ttilde >= u64::MAX as f64 {
        return Err(DetectionError::Overflow(format!(
            "running phase length overflows for p_min = {p_min}"
        )));
    }
    let identification_bound = btw_identification_bound(k, ttilde, p_min)?;
    Ok(BtwPhaseLength {
        ttilde: ttilde as u64,
        identification_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WsPhaseLength {
    pub rounds: u64,
    /// Saturates at `u64::MAX`.
    pub ttilde: u64,
    pub identification_bound: f64,
}

/// Running-phase length for DETECT with WS as the black box.
pub fn detect_ttilde_ws(
    k: usize,
    horizon: u64,
    p_min: f64,
) -> Result<WsPhaseLength, DetectionError> {
    check_winner_prob(p_min, false)?;
    if horizon < 3 {
        return Err(DetectionError::InvalidInput("T must be >= 3".into()));
    }
    let t = horizon as f64;
    let x = (1.0 - p_min) / p_min;
    let ratio = (2.0 * t * (1.0 + x / (1.0 - x)) / t.ln()).ln() / (p_min / (1.0 - p_min)).ln();
    if !ratio.is_finite() {
        return Err(DetectionError::Overflow(format!(
            "round count overflows for p_min = {p_min}"
        )));
    }
    let rounds = (ratio.ceil().max(2.0)) as u64;
    let r = rounds as f64;
    let kf = k as f64;
    let exact = r.powi(3) * kf.powi(3) * t / t.ln();
    let ttilde = if exact >= u64::MAX as f64 {
        u64::MAX
    } else {
        exact.ceil() as u64
    };
    let identification_bound = ws_identification_bound(k, rounds, exact, p_min)?;
    Ok(WsPhaseLength {
        rounds,
        ttilde,
        identification_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_rounding() {
        assert_eq!(smallest_even_at_least(1228.05), 1230);
        assert_eq!(smallest_even_at_least(1230.0), 1230);
        assert_eq!(smallest_even_at_least(1229.0), 1230);
        assert_eq!(smallest_even_at_least(0.3), 2);
    }

    #[test]
    fn mdb_constants() {
        let p = derive_mdb_params(5, 1_000_000, 10, 0.6, MdbVariant::Main).unwrap();
        assert!((p.log_term - 19.00).abs() < 5e-3, "C = {}", p.log_term);
        assert_eq!(p.w, 424);
        assert!((p.b - 63.5).abs() < 0.05, "b = {}", p.b);
        assert!((p.c - 0.299).abs() < 5e-4, "c = {}", p.c);
        assert!((p.gamma - 0.0921).abs() < 5e-5, "gamma = {}", p.gamma);
        assert!(!p.gamma_clamped());
        assert!(p.separates(0.6));
        assert!((p.b * p.b - p.w as f64 * p.log_term / 2.0).abs() < 1e-9);
    }

    #[test]
    fn mdb_unit_change_uses_8c() {
        let p = derive_mdb_params(4, 10_000_000_000, 3, 1.0, MdbVariant::Main).unwrap();
        assert_eq!(p.w, smallest_even_at_least(8.0 * p.log_term));
    }

    #[test]
    fn mdb_small_horizon_clamps_gamma() {
        let p = derive_mdb_params(3, 10, 5, 0.1, MdbVariant::Main).unwrap();
        assert_eq!(p.w, 2112);
        assert_eq!(p.gamma, 1.0);
        assert!(p.raw_gamma > 1.0);
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.block_len(3), 3);
    }

    #[test]
    fn delta_scaled_variant_shrinks_the_log_term() {
        let main = derive_mdb_params(5, 1_000_000, 10, 0.6, MdbVariant::Main).unwrap();
        let app = derive_mdb_params(5, 1_000_000, 10, 0.6, MdbVariant::DeltaScaled).unwrap();
        assert!((main.log_term - app.log_term - (1.0f64 / 0.6).ln()).abs() < 1e-12);
        assert!(app.w < main.w);
    }

    #[test]
    fn mdb_rejects_bad_input() {
        assert!(derive_mdb_params(2, 1000, 1, 0.5, MdbVariant::Main).is_err());
        assert!(derive_mdb_params(3, 1000, 1, 0.0, MdbVariant::Main).is_err());
        assert!(matches!(
            derive_mdb_params(30, 1, 1, 0.5, MdbVariant::Main),
            Err(DetectionError::InfeasibleHorizon(_))
        ));
    }

    #[test]
    fn detect_constants() {
        let p = derive_detect_params(1_000_000, 0.6).unwrap();
        assert_eq!(p.w, 1230);
        assert!((p.b * p.b - 2.0 * p.w as f64 * (1e6f64).ln()).abs() < 1e-6);
        assert!(p.separates(0.6));
        let e = detect_params_from_log(std::f64::consts::E, 1.0).unwrap();
        assert_eq!(e.w, 32);
        assert!(derive_detect_params(1, 0.5).is_err());
    }

    #[test]
    fn btw_phase_length() {
        // (ln(1e6 / ((1 - e^-0.25) ln 1e6)) / 0.25 + 4)^2 = 3002.2...
        let r = detect_ttilde_btw(5, 1_000_000, 0.75).unwrap();
        assert_eq!(r.ttilde, 3003);
        assert!(r.identification_bound > 0.99);
        let b = btw_identification_bound(5, 1e4, 0.75).unwrap();
        assert!((1.0 - b - 1.706_667e-10).abs() < 1e-15, "{}", 1.0 - b);
        assert!(matches!(
            btw_identification_bound(5, 24.0, 0.75),
            Err(DetectionError::TooSmallHorizon { .. })
        ));
        assert!(matches!(
            detect_ttilde_btw(5, 1000, 0.5),
            Err(DetectionError::InvalidProbability(_))
        ));
        assert!(matches!(
            detect_ttilde_btw(5, 1000, 0.5 + 1e-12),
            Err(DetectionError::Overflow(_))
        ));
    }

    #[test]
    fn ws_phase_length() {
        let b = ws_identification_bound(3, 2, 1e4, 0.75).unwrap();
        assert!(b > 0.8117 && (b - (1.0 - 1.0 / 6.0 - 0.0216)).abs() < 1e-12);
        let b1 = ws_identification_bound(3, 2, 1e4, 1.0).unwrap();
        assert!((b1 - (1.0 - 216.0 / 1e4)).abs() < 1e-12);
        let bounds: Vec<f64> = [1e3, 1e4, 1e5, 1e6]
            .iter()
            .map(|&tt| ws_identification_bound(3, 4, tt, 0.8).unwrap())
            .collect();
        assert!(bounds.windows(2).all(|w| w[0] <= w[1]));

        let r = detect_ttilde_ws(5, 1_000_000, 0.75).unwrap();
        // ln(2e6 * 1.5 / ln 1e6) / ln 3 = 11.18 -> 12
        assert_eq!(r.rounds, 12);
        assert!(r.ttilde > 1_000_000);
        assert!(detect_ttilde_ws(5, 1000, 1.0).is_err());
        assert_eq!(detect_ttilde_ws(5, 3, 0.99).unwrap().rounds, 2);
    }
}
