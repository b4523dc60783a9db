use super::ws::WinnerStays;
use super::{DuelingPolicy, Pending, PolicyError};

/// Winner Stays with exploitation phases for strong regret.
///
/// Runs [`WinnerStays`]; whenever one of its iterations concludes, the
/// iteration winner is played against itself for `⌈β^ℓ⌉` steps, `ℓ` being
/// the number of iterations completed so far.
#[derive(Debug, Clone)]
pub struct WinnerStaysStrong {
    inner: WinnerStays,
    beta: f64,
    exploit_left: u64,
    exploit_arm: usize,
    pending: Pending,
}

impl WinnerStaysStrong {
    pub fn new(k: usize, beta: f64, seed: u64) -> Result<Self, PolicyError> {
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(PolicyError::InvalidBeta(beta));
        }
        Ok(Self {
            inner: WinnerStays::new(k, seed)?,
            beta,
            exploit_left: 0,
            exploit_arm: 0,
            pending: Pending::default(),
        })
    }

    pub fn is_exploiting(&self) -> bool {
        self.exploit_left > 0
    }

    pub fn exploit_left(&self) -> u64 {
        self.exploit_left
    }

    pub fn inner(&self) -> &WinnerStays {
        &self.inner
    }

    fn phase_length(&self, completed: u64) -> u64 {
        let len = self.beta.powf(completed as f64).ceil();
        if len >= u64::MAX as f64 {
            u64::MAX
        } else {
            len as u64
        }
    }
}

impl DuelingPolicy for WinnerStaysStrong {
    fn num_arms(&self) -> usize {
        self.inner.num_arms()
    }

    fn select_pair(&mut self) -> (usize, usize) {
        if let Some(p) = self.pending.get() {
            return p;
        }
        let pair = if self.exploit_left > 0 {
            (self.exploit_arm, self.exploit_arm)
        } else {
            self.inner.select_pair()
        };
        self.pending.set(pair)
    }

    fn observe(&mut self, i: usize, j: usize, won: bool) -> Result<(), PolicyError> {
        self.pending.take(i, j)?;
        if self.exploit_left > 0 {
            self.exploit_left -= 1;
            return Ok(());
        }
        let before = self.inner.completed_iterations();
        self.inner.observe(i, j, won)?;
        let after = self.inner.completed_iterations();
        if after > before {
            self.exploit_arm = self
                .inner
                .current_incumbent()
                .expect("a duel has been played");
            self.exploit_left = self.phase_length(after);
        }
        Ok(())
    }

    fn suspected_winner(&self) -> Option<usize> {
        self.current_incumbent()
    }

    fn current_incumbent(&self) -> Option<usize> {
        if self.exploit_left > 0 {
            Some(self.exploit_arm)
        } else {
            self.inner.current_incumbent()
        }
    }

    fn reset(&mut self) {
        self.inner.reset();
        self.exploit_left = 0;
        self.pending.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exploitation_follows_each_iteration() {
        let mut p = WinnerStaysStrong::new(3, 2.0, 0).unwrap();
        // first duel always ends iteration 1 of round 1
        let (i, j) = p.select_pair();
        p.observe(i, j, true).unwrap();
        assert!(p.is_exploiting());
        assert_eq!(p.exploit_left(), 2);
        for _ in 0..2 {
            assert_eq!(p.select_pair(), (i, i));
            assert_eq!(p.suspected_winner(), Some(i));
            p.observe(i, i, false).unwrap();
        }
        assert!(!p.is_exploiting());
        let (a, b) = p.select_pair();
        assert_ne!(a, b);
        assert_eq!(a, i);
    }

    #[test]
    fn rejects_non_growing_beta() {
        assert_eq!(
            WinnerStaysStrong::new(3, 1.0, 0).unwrap_err(),
            PolicyError::InvalidBeta(1.0)
        );
    }

    #[test]
    fn exploit_observations_do_not_touch_scores() {
        let mut p = WinnerStaysStrong::new(4, 1.05, 2).unwrap();
        for _ in 0..500 {
            let (i, j) = p.select_pair();
            let before = p.inner().scores().to_vec();
            p.observe(i, j, true).unwrap();
            if i == j {
                assert_eq!(p.inner().scores(), &before[..]);
            }
        }
    }
}
