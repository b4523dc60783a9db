use crate::policies::{DuelingPolicy, Pending, PolicyError};

use super::{DetectionError, DetectionWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectPhase {
    /// Delegating to the black box for the first `T̃` steps after a reset.
    Running,
    /// Playing the frozen suspect against every other arm in turn.
    Detecting { suspect: usize },
}

/// Dueling Explore-Then-Exploit Changepoint Test.
///
/// The `T̃` steps after each reset go to the black box. Step `τ + T̃ + 1`
/// freezes the black box's suspected winner `I` and from then on plays
/// `(I, O[r])` with `O` the other arms in ascending order and
/// `r = (t − τ − T̃ − 1) mod (K − 1)`. Each of the `K − 1` windows watches
/// one of those pairs; an alarm resets the black box and starts a new
/// running phase.
#[derive(Debug, Clone)]
pub struct Detect<P> {
    k: usize,
    threshold: f64,
    running_len: u64,
    windows: Vec<DetectionWindow>,
    opponents: Vec<usize>,
    phase: DetectPhase,
    blackbox: P,
    tau: u64,
    t: u64,
    pending: Pending,
    pending_slot: Option<usize>,
    alarms: Vec<u64>,
}

impl<P: DuelingPolicy> Detect<P> {
    pub fn new(
        w: usize,
        threshold: f64,
        running_len: u64,
        blackbox: P,
    ) -> Result<Self, DetectionError> {
        let k = blackbox.num_arms();
        if k < 2 {
            return Err(DetectionError::InvalidInput(format!(
                "DETECT needs K >= 2, got {k}"
            )));
        }
        if w < 2 || !w.is_multiple_of(2) {
            return Err(DetectionError::InvalidInput(format!(
                "window length {w} must be even and >= 2"
            )));
        }
        if running_len == 0 {
            return Err(DetectionError::InvalidInput(
                "running phase must last >= 1 step".into(),
            ));
        }
        Ok(Self {
            k,
            threshold,
            running_len,
            windows: (1..k).map(|_| DetectionWindow::new(w)).collect(),
            opponents: Vec::with_capacity(k - 1),
            phase: DetectPhase::Running,
            blackbox,
            tau: 0,
            t: 0,
            pending: Pending::default(),
            pending_slot: None,
            alarms: Vec::new(),
        })
    }

    pub fn phase(&self) -> DetectPhase {
        self.phase
    }

    pub fn running_len(&self) -> u64 {
        self.running_len
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn alarms(&self) -> &[u64] {
        &self.alarms
    }

    pub fn windows(&self) -> &[DetectionWindow] {
        &self.windows
    }

    /// Opponents of the frozen suspect, in monitoring order.
    pub fn opponents(&self) -> &[usize] {
        &self.opponents
    }

    pub fn blackbox(&self) -> &P {
        &self.blackbox
    }

    fn start_detection(&mut self) {
        let suspect = self
            .blackbox
            .suspected_winner()
            .or_else(|| self.blackbox.current_incumbent())
            .unwrap_or(0);
        self.opponents.clear();
        self.opponents.extend((0..self.k).filter(|&a| a != suspect));
        self.windows.iter_mut().for_each(DetectionWindow::clear);
        self.phase = DetectPhase::Detecting { suspect };
    }
}

impl<P: DuelingPolicy> DuelingPolicy for Detect<P> {
    fn num_arms(&self) -> usize {
        self.k
    }

    fn select_pair(&mut self) -> (usize, usize) {
        if let Some(p) = self.pending.get() {
            return p;
        }
        let since = self.t + 1 - self.tau;
        let pair = if since <= self.running_len {
            self.pending_slot = None;
            self.blackbox.select_pair()
        } else {
            if self.phase == DetectPhase::Running {
                self.start_detection();
            }
            let DetectPhase::Detecting { suspect } = self.phase else {
                unreachable!("detection phase was just started")
            };
            let r = ((since - self.running_len - 1) % (self.k as u64 - 1)) as usize;
            self.pending_slot = Some(r);
            (suspect, self.opponents[r])
        };
        self.pending.set(pair)
    }

    fn observe(&mut self, i: usize, j: usize, won: bool) -> Result<(), PolicyError> {
        self.pending.take(i, j)?;
        self.t += 1;
        match self.pending_slot.take() {
            Some(r) => {
                let window = &mut self.windows[r];
                window.push(won);
                if window.alarm(self.threshold) {
                    self.tau = self.t;
                    self.alarms.push(self.t);
                    self.blackbox.reset();
                    self.phase = DetectPhase::Running;
                }
                Ok(())
            }
            None => self.blackbox.observe(i, j, won),
        }
    }

    fn suspected_winner(&self) -> Option<usize> {
        match self.phase {
            DetectPhase::Detecting { suspect } => Some(suspect),
            DetectPhase::Running => self.blackbox.suspected_winner(),
        }
    }

    fn current_incumbent(&self) -> Option<usize> {
        match self.phase {
            DetectPhase::Detecting { suspect } => Some(suspect),
            DetectPhase::Running => self.blackbox.current_incumbent(),
        }
    }

    fn reset(&mut self) {
        self.blackbox.reset();
        self.windows.iter_mut().for_each(DetectionWindow::clear);
        self.phase = DetectPhase::Running;
        self.tau = self.t;
        self.pending.clear();
        self.pending_slot = None;
    }
}
