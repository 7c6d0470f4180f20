//! Fixed-capacity experience replay with FIFO eviction and seeded
//! without-replacement batch sampling.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// One stored interaction. `params` keeps the full continuous parameter
/// vector the actor emitted (noise included), one entry per discrete action;
/// `k` is the discrete action actually executed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experience {
    pub state: [f64; 3],
    pub params: [f64; 2],
    pub k: usize,
    pub reward: f64,
    pub next_state: [f64; 3],
    pub done: bool,
}

/// Ring buffer of experiences.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    data: Vec<Experience>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        assert!(capacity > 0);
        ReplayBuffer {
            data: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Append, evicting the oldest entry once full.
    pub fn push(&mut self, e: Experience) {
        if self.data.len() < self.capacity {
            self.data.push(e);
        } else {
            self.data[self.next] = e;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> &Experience {
        &self.data[i]
    }

    /// Distinct indices for one mini-batch, deterministic under the rng.
    pub fn sample_indices(&self, batch: usize, rng: &mut ChaCha12Rng) -> Vec<usize> {
        assert!(batch <= self.data.len(), "batch larger than buffer");
        let mut picked = Vec::with_capacity(batch);
        while picked.len() < batch {
            let i = rng.random_range(0..self.data.len());
            if !picked.contains(&i) {
                picked.push(i);
            }
        }
        picked
    }

    /// Iterate over the stored window (order unspecified).
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.data.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    fn exp(tag: f64) -> Experience {
        Experience {
            state: [tag, 0.0, 0.0],
            params: [0.0, 0.0],
            k: 0,
            reward: tag,
            next_state: [tag, 0.0, 0.0],
            done: false,
        }
    }

    #[test]
    fn fifo_eviction_keeps_exactly_last_capacity() {
        let cap = 8;
        let mut buf = ReplayBuffer::new(cap);
        let n = 21;
        for i in 0..cap + n {
            buf.push(exp(i as f64));
        }
        assert_eq!(buf.len(), cap);
        let mut rewards: Vec<f64> = buf.iter().map(|e| e.reward).collect();
        rewards.sort_by(f64::total_cmp);
        let expect: Vec<f64> = (n..n + cap).map(|i| i as f64).collect();
        assert_eq!(rewards, expect);
    }

    #[test]
    fn batch_has_no_repeats_and_is_seed_deterministic() {
        let mut buf = ReplayBuffer::new(100);
        for i in 0..50 {
            buf.push(exp(i as f64));
        }
        let mut rng1 = ChaCha12Rng::seed_from_u64(5);
        let idx1 = buf.sample_indices(32, &mut rng1);
        let mut sorted = idx1.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 32);
        let mut rng2 = ChaCha12Rng::seed_from_u64(5);
        assert_eq!(idx1, buf.sample_indices(32, &mut rng2));
    }
}
