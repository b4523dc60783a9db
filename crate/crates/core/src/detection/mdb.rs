use crate::policies::{DuelingPolicy, Pending, PolicyError};

use super::{block_len, DetectionError, DetectionWindow};

/// Monitored Dueling Bandits.
///
/// Time after the last reset `τ` is cut into blocks of `⌊K(K−1)/(2γ)⌋`
/// steps. The first `K(K−1)/2` steps of a block play every pair `i < j` once
/// in lexicographic order and feed that pair's window; the remaining steps
/// are delegated to the black box. An alarm on the window just fed clears
/// all windows and resets the black box.
#[derive(Debug, Clone)]
pub struct Mdb<P> {
    k: usize,
    threshold: f64,
    block: u64,
    pairs: Vec<(usize, usize)>,
    windows: Vec<DetectionWindow>,
    blackbox: P,
    tau: u64,
    t: u64,
    pending: Pending,
    /// Index into `pairs` when the pending pair is a detection step.
    pending_detection: Option<usize>,
    alarms: Vec<u64>,
}

impl<P: DuelingPolicy> Mdb<P> {
    pub fn new(w: usize, threshold: f64, gamma: f64, blackbox: P) -> Result<Self, DetectionError> {
        let k = blackbox.num_arms();
        if k < 2 {
            return Err(DetectionError::InvalidInput(format!(
                "MDB needs K >= 2, got {k}"
            )));
        }
        if w < 2 || !w.is_multiple_of(2) {
            return Err(DetectionError::InvalidInput(format!(
                "window length {w} must be even and >= 2"
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(DetectionError::InvalidInput(format!(
                "exploration rate {gamma} outside (0, 1]"
            )));
        }
        let pairs: Vec<(usize, usize)> = (0..k)
            .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
            .collect();
        Ok(Self {
            k,
            threshold,
            block: block_len(k, gamma),
            windows: pairs.iter().map(|_| DetectionWindow::new(w)).collect(),
            pairs,
            blackbox,
            tau: 0,
            t: 0,
            pending: Pending::default(),
            pending_detection: None,
            alarms: Vec::new(),
        })
    }

    pub fn block_len(&self) -> u64 {
        self.block
    }

    /// Pairs in monitoring order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn windows(&self) -> &[DetectionWindow] {
        &self.windows
    }

    /// Step of the last alarm (0 before any).
    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn alarms(&self) -> &[u64] {
        &self.alarms
    }

    /// Steps observed so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn blackbox(&self) -> &P {
        &self.blackbox
    }

    /// Whether the next step is a detection step.
    pub fn next_is_detection(&self) -> bool {
        self.detection_slot(self.t + 1).is_some()
    }

    fn detection_slot(&self, t: u64) -> Option<usize> {
        let r = ((t - self.tau - 1) % self.block) as usize;
        (r < self.pairs.len()).then_some(r)
    }
}

impl<P: DuelingPolicy> DuelingPolicy for Mdb<P> {
    fn num_arms(&self) -> usize {
        self.k
    }

    fn select_pair(&mut self) -> (usize, usize) {
        if let Some(p) = self.pending.get() {
            return p;
        }
        let slot = self.detection_slot(self.t + 1);
        self.pending_detection = slot;
        let pair = match slot {
            Some(r) => self.pairs[r],
            None => self.blackbox.select_pair(),
        };
        self.pending.set(pair)
    }

    fn observe(&mut self, i: usize, j: usize, won: bool) -> Result<(), PolicyError> {
        self.pending.take(i, j)?;
        self.t += 1;
        match self.pending_detection.take() {
            Some(r) => {
                let window = &mut self.windows[r];
                window.push(won);
                if window.alarm(self.threshold) {
                    self.tau = self.t;
                    self.alarms.push(self.t);
                    self.windows.iter_mut().for_each(DetectionWindow::clear);
                    self.blackbox.reset();
                }
                Ok(())
            }
            None => self.blackbox.observe(i, j, won),
        }
    }

    fn suspected_winner(&self) -> Option<usize> {
        self.blackbox.suspected_winner()
    }

    fn current_incumbent(&self) -> Option<usize> {
        self.blackbox.current_incumbent()
    }

    fn reset(&mut self) {
        self.windows.iter_mut().for_each(DetectionWindow::clear);
        self.blackbox.reset();
        self.tau = self.t;
        self.pending.clear();
        self.pending_detection = None;
    }
}
