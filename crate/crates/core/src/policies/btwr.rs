use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::btw::{RoundEnd, Tournament};
use super::{check_arms, DuelingPolicy, Pending, PolicyError};

/// Round length after `streak` consecutive rounds held by the incumbent:
/// `⌈ ln(c(c+1)e/δ) / (4Δ²) − 1/2 ⌉`, at least 1.
pub fn round_length(streak: u64, gap: f64, confidence: f64) -> Result<u64, PolicyError> {
    if !(gap > 0.0 && gap <= 0.5) {
        return Err(PolicyError::InvalidGap(gap));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(PolicyError::InvalidConfidence(confidence));
    }
    let c = streak.max(1) as f64;
    let len = ((c * (c + 1.0)).ln() + 1.0 - confidence.ln()) / (4.0 * gap * gap) - 0.5;
    Ok(len.ceil().max(1.0) as u64)
}

/// Beat the Winner Reset: like BtW, but the round length follows the
/// incumbent's streak `c` and drops back to `ℓ_1` as soon as it loses.
#[derive(Debug, Clone)]
pub struct BeatTheWinnerReset {
    rng: ChaCha8Rng,
    tournament: Tournament,
    gap: f64,
    confidence: f64,
    streak: u64,
    target: u64,
    pending: Pending,
}

impl BeatTheWinnerReset {
    pub fn new(k: usize, gap: f64, confidence: f64, seed: u64) -> Result<Self, PolicyError> {
        check_arms(k)?;
        let target = round_length(1, gap, confidence)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tournament = Tournament::new(k, &mut rng);
        Ok(Self {
            rng,
            tournament,
            gap,
            confidence,
            streak: 1,
            target,
            pending: Pending::default(),
        })
    }

    /// The streak counter `c`.
    pub fn streak(&self) -> u64 {
        self.streak
    }

    /// Wins needed to end the current round.
    pub fn target(&self) -> u64 {
        self.target
    }

    pub fn wins(&self) -> (u64, u64) {
        self.tournament.wins()
    }

    pub fn queue(&self) -> Vec<usize> {
        self.tournament.queue().iter().copied().collect()
    }

    pub fn in_round(&self) -> bool {
        self.tournament.in_round()
    }
}

impl DuelingPolicy for BeatTheWinnerReset {
    fn num_arms(&self) -> usize {
        self.tournament.k()
    }

    fn select_pair(&mut self) -> (usize, usize) {
        if let Some(p) = self.pending.get() {
            return p;
        }
        let pair = self.tournament.pair();
        self.pending.set(pair)
    }

    fn observe(&mut self, i: usize, j: usize, won: bool) -> Result<(), PolicyError> {
        self.pending.take(i, j)?;
        if let Some(end) = self.tournament.record(won, self.target) {
            self.streak = match end {
                RoundEnd::Defended => self.streak + 1,
                RoundEnd::Dethroned => 1,
            };
            // the parameters were validated at construction
            self.target = round_length(self.streak, self.gap, self.confidence)
                .expect("validated round-length parameters");
        }
        Ok(())
    }

    fn suspected_winner(&self) -> Option<usize> {
        Some(self.tournament.incumbent())
    }

    fn current_incumbent(&self) -> Option<usize> {
        Some(self.tournament.incumbent())
    }

    fn reset(&mut self) {
        self.tournament = Tournament::new(self.tournament.k(), &mut self.rng);
        self.streak = 1;
        self.target = round_length(1, self.gap, self.confidence).expect("validated");
        self.pending.clear();
    }
}
