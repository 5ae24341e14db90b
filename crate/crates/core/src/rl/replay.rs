use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::types::{ActionVector, StateVector};
use crate::{Error, Result};

/// One environment transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: StateVector,
    pub action: ActionVector,
    pub reward: f64,
    pub next_state: StateVector,
    /// 1.0 on a terminal success, 0.0 otherwise (timeouts bootstrap).
    pub done: f64,
}

/// Fixed-capacity ring buffer with its own seeded sampler. Storage grows up to
/// `capacity` and then overwrites the oldest slot.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    cursor: usize,
    items: Vec<Transition>,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(Self { capacity, cursor: 0, items: Vec::new(), rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// `n` transitions drawn uniformly with replacement from the filled region.
    pub fn sample(&mut self, n: usize) -> Result<Vec<Transition>> {
        if self.items.is_empty() {
            return Err(Error::State("cannot sample from an empty replay buffer".into()));
        }
        let len = self.items.len();
        Ok((0..n).map(|_| self.items[self.rng.random_range(0..len)]).collect())
    }
}
