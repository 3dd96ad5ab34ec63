//! Experience replay memory.
//!
//! Transitions are kept in arrival order in a ring buffer. Because the
//! environment produces one continuous stream, consecutive stored
//! transitions chain (`s_next` of one is `s_det` of the next), which lets
//! recurrent agents sample contiguous windows.

use rand::Rng;

use crate::signal::Transition;

#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    items: Vec<Transition>,
    /// Physical index of the oldest item once the buffer is full.
    head: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: Vec::with_capacity(capacity.min(1 << 20)), head: 0 }
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

    /// Appends, evicting the oldest item when full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Item by age order: 0 is the oldest stored transition.
    pub fn get(&self, logical: usize) -> &Transition {
        &self.items[(self.head + logical) % self.items.len()]
    }

    /// The most recent `count` transitions, oldest first.
    pub fn recent(&self, count: usize) -> impl Iterator<Item = &Transition> {
        let len = self.len();
        let start = len.saturating_sub(count);
        (start..len).map(move |i| self.get(i))
    }

    /// Uniform logical index.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.len())
    }

    /// `count` transitions drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Transition> {
        (0..count).map(|_| *self.get(self.sample_index(rng))).collect()
    }

    /// `count` windows of `length` consecutive transitions, start positions
    /// uniform over all complete windows.
    pub fn sample_windows<R: Rng + ?Sized>(&self, count: usize, length: usize, rng: &mut R) -> Vec<Vec<Transition>> {
        assert!(length > 0 && length <= self.len(), "not enough transitions for a window");
        let starts = self.len() - length + 1;
        (0..count)
            .map(|_| {
                let s = rng.random_range(0..starts);
                (s..s + length).map(|i| *self.get(i)).collect()
            })
            .collect()
    }
}
