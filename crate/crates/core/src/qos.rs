//! DDS-style quality of service and keep-last history.

use alloc::collections::VecDeque;
use core::num::NonZeroUsize;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reliability {
    BestEffort,
    Reliable,
}

/// Only volatile durability exists: late joiners never see past samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Durability {
    Volatile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QosProfile {
    pub reliability: Reliability,
    pub durability: Durability,
    pub history_depth: NonZeroUsize,
}

impl Default for QosProfile {
    /// Best effort, volatile, keep last 1: real-time topics always act on the
    /// freshest sample.
    fn default() -> Self {
        Self {
            reliability: Reliability::BestEffort,
            durability: Durability::Volatile,
            history_depth: NonZeroUsize::MIN,
        }
    }
}

impl QosProfile {
    pub fn reliable(depth: usize) -> Self {
        Self {
            reliability: Reliability::Reliable,
            ..Self::default()
        }
        .with_depth(depth)
    }

    /// Reliable with an effectively unbounded queue. Used by recorders.
    pub fn lossless() -> Self {
        Self::reliable(usize::MAX)
    }

    /// Sets the history depth; zero is clamped to one.
    pub fn with_depth(mut self, depth: usize) -> Self {
        self.history_depth = NonZeroUsize::new(depth).unwrap_or(NonZeroUsize::MIN);
        self
    }

    pub fn is_best_effort(&self) -> bool {
        self.reliability == Reliability::BestEffort
    }
}

/// Bounded FIFO where a push into a full queue evicts the oldest entry.
#[derive(Debug, Clone)]
pub struct KeepLast<T> {
    depth: NonZeroUsize,
    items: VecDeque<T>,
}

impl<T> KeepLast<T> {
    pub fn new(depth: NonZeroUsize) -> Self {
        Self {
            depth,
            items: VecDeque::new(),
        }
    }

    /// Pushes `item`, returning the evicted entry if the queue was full.
    pub fn push(&mut self, item: T) -> Option<T> {
        let evicted = if self.items.len() == self.depth.get() {
            self.items.pop_front()
        } else {
            None
        };
        self.items.push_back(item);
        evicted
    }

    pub fn pop(&mut self) -> Option<T> {
        self.items.pop_front()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn depth(&self) -> NonZeroUsize {
        self.depth
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn default_profile() {
        let q = QosProfile::default();
        assert_eq!(q.reliability, Reliability::BestEffort);
        assert_eq!(q.durability, Durability::Volatile);
        assert_eq!(q.history_depth.get(), 1);
    }

    #[test]
    fn depth_one_keeps_newest() {
        let mut q = KeepLast::new(NonZeroUsize::MIN);
        q.push('a');
        assert_eq!(q.push('b'), Some('a'));
        assert_eq!(q.pop(), Some('b'));
        assert_eq!(q.pop(), None);
    }

    proptest! {
        #[test]
        fn holds_last_min_k_d(depth in 1usize..8, items in proptest::collection::vec(any::<u16>(), 0..40)) {
            let mut q = KeepLast::new(NonZeroUsize::new(depth).unwrap());
            for &i in &items {
                q.push(i);
            }
            let keep = items.len().min(depth);
            let expected: Vec<u16> = items[items.len() - keep..].to_vec();
            let held: Vec<u16> = q.iter().copied().collect();
            prop_assert_eq!(held, expected);
        }
    }
}
