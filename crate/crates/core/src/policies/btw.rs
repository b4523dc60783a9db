use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_arms, DuelingPolicy, Pending, PolicyError};

/// How a round of first-to-`target` wins ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RoundEnd {
    /// The incumbent won; the challenger went to the back of the queue.
    Defended,
    /// The challenger won and took over; the old incumbent was enqueued.
    Dethroned,
}

/// Incumbent plus FIFO queue of challengers, shared by BtW and BtWR.
#[derive(Debug, Clone)]
pub(crate) struct Tournament {
    k: usize,
    incumbent: usize,
    queue: VecDeque<usize>,
    challenger: Option<usize>,
    incumbent_wins: u64,
    challenger_wins: u64,
}

impl Tournament {
    pub(crate) fn new(k: usize, rng: &mut ChaCha8Rng) -> Self {
        let incumbent = rng.random_range(0..k);
        let mut others: Vec<usize> = (0..k).filter(|&a| a != incumbent).collect();
        others.shuffle(rng);
        Self {
            k,
            incumbent,
            queue: others.into(),
            challenger: None,
            incumbent_wins: 0,
            challenger_wins: 0,
        }
    }

    pub(crate) fn k(&self) -> usize {
        self.k
    }

    pub(crate) fn incumbent(&self) -> usize {
        self.incumbent
    }

    pub(crate) fn queue(&self) -> &VecDeque<usize> {
        &self.queue
    }

    pub(crate) fn wins(&self) -> (u64, u64) {
        (self.incumbent_wins, self.challenger_wins)
    }

    pub(crate) fn in_round(&self) -> bool {
        self.challenger.is_some()
    }

    /// Current pair, dequeuing a new challenger between rounds.
    pub(crate) fn pair(&mut self) -> (usize, usize) {
        let challenger = match self.challenger {
            Some(c) => c,
            None => {
                let c = self
                    .queue
                    .pop_front()
                    .expect("queue holds K-1 arms between rounds");
                self.challenger = Some(c);
                self.incumbent_wins = 0;
                self.challenger_wins = 0;
                c
            }
        };
        (self.incumbent, challenger)
    }

    /// Counts one duel of the current round; returns how the round ended
    /// once either side reaches `target` wins.
    pub(crate) fn record(&mut self, incumbent_won: bool, target: u64) -> Option<RoundEnd> {
        let challenger = self.challenger.expect("record is only called mid-round");
        if incumbent_won {
            self.incumbent_wins += 1;
        } else {
            self.challenger_wins += 1;
        }
        if self.incumbent_wins >= target {
            self.queue.push_back(challenger);
            self.challenger = None;
            Some(RoundEnd::Defended)
        } else if self.challenger_wins >= target {
            self.queue.push_back(self.incumbent);
            self.incumbent = challenger;
            self.challenger = None;
            Some(RoundEnd::Dethroned)
        } else {
            None
        }
    }
}

/// Beat the Winner: round `r` is played first-to-`r` wins, `r` grows every
/// round regardless of who won.
#[derive(Debug, Clone)]
pub struct BeatTheWinner {
    rng: ChaCha8Rng,
    tournament: Tournament,
    round: u64,
    pending: Pending,
}

impl BeatTheWinner {
    pub fn new(k: usize, seed: u64) -> Result<Self, PolicyError> {
        check_arms(k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tournament = Tournament::new(k, &mut rng);
        Ok(Self {
            rng,
            tournament,
            round: 1,
            pending: Pending::default(),
        })
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Wins of (incumbent, challenger) in the current round.
    pub fn wins(&self) -> (u64, u64) {
        self.tournament.wins()
    }

    pub fn queue_len(&self) -> usize {
        self.tournament.queue().len()
    }

    pub fn queue(&self) -> Vec<usize> {
        self.tournament.queue().iter().copied().collect()
    }
}

impl DuelingPolicy for BeatTheWinner {
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
        if self.tournament.record(won, self.round).is_some() {
            self.round += 1;
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
        self.round = 1;
        self.pending.clear();
    }
}
