use serde::{Deserialize, Serialize};

/// Memory slots of one node. Slots are either free or holding a qubit whose
/// photon awaits its round-trip confirmation; confirmed pairs leave the slot
/// for the node's application buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryPool {
    pub capacity: u32,
    pub free_slots: u32,
    pub in_flight: u32,
    /// Confirmed pairs awaiting consumption or swapping.
    pub entangled_buffer: u64,
}

impl MemoryPool {
    pub fn new(capacity: u32) -> Self {
        Self {
            capacity,
            free_slots: capacity,
            in_flight: 0,
            entangled_buffer: 0,
        }
    }

    pub fn reserve(&mut self, n: u32) {
        assert!(n <= self.free_slots, "reserving {n} of {} free slots", self.free_slots);
        self.free_slots -= n;
        self.in_flight += n;
    }

    pub fn release(&mut self, n: u32) {
        assert!(n <= self.in_flight, "releasing {n} of {} in-flight slots", self.in_flight);
        self.in_flight -= n;
        self.free_slots += n;
    }

    pub fn is_consistent(&self) -> bool {
        self.free_slots + self.in_flight == self.capacity
    }
}


/// Confirmed pairs of one leg waiting for a swap partner, oldest first.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct PairBuffer {
    batches: std::collections::VecDeque<(f64, u64)>,
    len: u64,
}

impl PairBuffer {
    pub(crate) fn len(&self) -> u64 {
        self.len
    }

    /// Stores up to `pairs` confirmed at `now`, respecting `capacity`.
    /// Returns the number stored.
    pub(crate) fn deposit(&mut self, now: f64, pairs: u64, capacity: Option<u64>) -> u64 {
        let stored = match capacity {
            Some(cap) => pairs.min(cap.saturating_sub(self.len)),
            None => pairs,
        };
        if stored > 0 {
            self.batches.push_back((now, stored));
            self.len += stored;
        }
        stored
    }

    /// Discards pairs that have waited longer than `cutoff`. Returns how many.
    pub(crate) fn expire(&mut self, now: f64, cutoff: Option<f64>) -> u64 {
        let Some(cutoff) = cutoff else {
            return 0;
        };
        let mut expired = 0;
        while let Some(&(t, n)) = self.batches.front() {
            if now - t <= cutoff {
                break;
            }
            self.batches.pop_front();
            expired += n;
        }
        self.len -= expired;
        expired
    }

    /// Removes the `n` oldest pairs.
    pub(crate) fn take(&mut self, mut n: u64) {
        assert!(n <= self.len);
        self.len -= n;
        while n > 0 {
            let front = self.batches.front_mut().expect("non-empty buffer");
            if front.1 <= n {
                n -= front.1;
                self.batches.pop_front();
            } else {
                front.1 -= n;
                n = 0;
            }
        }
    }
}
