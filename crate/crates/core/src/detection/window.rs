/// The last `w` duel outcomes of one pair, split into an older half `A` and
/// a newer half `B`. An alarm is raised when `|ΣA − ΣB| > b` on a full
/// window.
#[derive(Debug, Clone)]
pub struct DetectionWindow {
    capacity: usize,
    bits: Vec<bool>,
    /// Index of the oldest bit once the buffer is full.
    head: usize,
    pushes: u64,
    older_sum: i64,
    newer_sum: i64,
}

impl DetectionWindow {
    /// `capacity` must be even and at least 2.
    pub fn new(capacity: usize) -> Self {
        assert!(
            capacity >= 2 && capacity.is_multiple_of(2),
            "window capacity must be even and >= 2, got {capacity}"
        );
        Self {
            capacity,
            bits: Vec::with_capacity(capacity),
            head: 0,
            pushes: 0,
            older_sum: 0,
            newer_sum: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Pushes since construction or the last clear (`n` in the alarm rule).
    pub fn pushes(&self) -> u64 {
        self.pushes
    }

    pub fn is_full(&self) -> bool {
        self.pushes >= self.capacity as u64
    }

    pub fn push(&mut self, bit: bool) {
        let half = self.capacity / 2;
        let x = bit as i64;
        if self.bits.len() < self.capacity {
            if self.bits.len() < half {
                self.older_sum += x;
            } else {
                self.newer_sum += x;
            }
            self.bits.push(bit);
        } else {
            let oldest = self.bits[self.head] as i64;
            let middle = self.bits[(self.head + half) % self.capacity] as i64;
            self.older_sum += middle - oldest;
            self.newer_sum += x - middle;
            self.bits[self.head] = bit;
            self.head = (self.head + 1) % self.capacity;
        }
        self.pushes += 1;
    }

    /// `(ΣA, ΣB)` over the current contents (meaningful once full).
    pub fn half_sums(&self) -> (i64, i64) {
        (self.older_sum, self.newer_sum)
    }

    pub fn statistic(&self) -> i64 {
        (self.older_sum - self.newer_sum).abs()
    }

    pub fn alarm(&self, threshold: f64) -> bool {
        self.is_full() && self.statistic() as f64 > threshold
    }

    /// Contents oldest first.
    pub fn contents(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.bits.len());
        if self.bits.len() < self.capacity {
            out.extend_from_slice(&self.bits);
        } else {
            out.extend_from_slice(&self.bits[self.head..]);
            out.extend_from_slice(&self.bits[..self.head]);
        }
        out
    }

    pub fn clear(&mut self) {
        self.bits.clear();
        self.head = 0;
        self.pushes = 0;
        self.older_sum = 0;
        self.newer_sum = 0;
    }
}
