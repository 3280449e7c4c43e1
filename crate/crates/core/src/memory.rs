//! Fixed-capacity episodic memory filled by reservoir sampling.

use alloc::vec::Vec;

use rand::seq::index;

use crate::error::{invalid, Result};
use crate::numeric::{DenseVector, Rng};

/// A labelled raw input kept for rehearsal.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSample {
    /// Raw input features (not extractor outputs).
    pub x: DenseVector,
    /// Dataset label.
    pub y: usize,
    /// 1-based position of the sample in the stream.
    pub stream_position: u64,
}

/// Reservoir of at most `capacity` samples.
///
/// After `n` offers every offered sample is held with probability
/// `min(1, capacity / n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBuffer {
    capacity: usize,
    items: Vec<StoredSample>,
    seen: u64,
}

impl MemoryBuffer {
    /// Empty buffer with fixed `capacity`.
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            seen: 0,
        }
    }

    /// Rebuilds a buffer from a snapshot.
    pub fn from_parts(capacity: usize, seen: u64, items: Vec<StoredSample>) -> Result<Self> {
        let expected = (capacity as u64).min(seen);
        if items.len() as u64 != expected {
            return Err(invalid(alloc::format!(
                "buffer snapshot holds {} items, expected min(seen={seen}, capacity={capacity})",
                items.len()
            )));
        }
        Ok(Self {
            capacity,
            items,
            seen,
        })
    }

    /// Maximum number of stored samples.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of stored samples.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    /// True when nothing is stored.
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Number of samples offered so far.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// Stored samples in slot order.
    pub fn items(&self) -> &[StoredSample] {
        &self.items
    }

    /// Offers one sample: the `n`-th offer is inserted while the buffer has
    /// room, and otherwise overwrites a uniformly chosen slot with
    /// probability `capacity / n`.
    pub fn offer(&mut self, sample: StoredSample, rng: &mut Rng) {
        self.seen += 1;
        if self.items.len() < self.capacity {
            self.items.push(sample);
            return;
        }
        if self.capacity == 0 {
            return;
        }
        let slot = rng.below(self.seen);
        if let Some(item) = self.items.get_mut(slot as usize) {
            *item = sample;
        }
    }

    /// Offers every sample of `batch` in order.
    pub fn update(&mut self, batch: impl IntoIterator<Item = StoredSample>, rng: &mut Rng) {
        for sample in batch {
            self.offer(sample, rng);
        }
    }

    /// `min(k, len)` distinct stored samples chosen uniformly, in random
    /// order.
    pub fn retrieve(&self, k: usize, rng: &mut Rng) -> Vec<&StoredSample> {
        let amount = k.min(self.items.len());
        if amount == 0 {
            return Vec::new();
        }
        index::sample(rng, self.items.len(), amount)
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(pos: u64) -> StoredSample {
        StoredSample {
            x: DenseVector::zeros(1),
            y: (pos % 3) as usize,
            stream_position: pos,
        }
    }

    #[test]
    fn under_capacity_keeps_everything() {
        let mut buf = MemoryBuffer::new(5);
        let mut rng = Rng::new(0);
        buf.update((1..=3).map(sample), &mut rng);
        let pos: Vec<u64> = buf.items().iter().map(|s| s.stream_position).collect();
        assert_eq!(pos, [1, 2, 3]);
        assert_eq!(buf.seen(), 3);
    }

    #[test]
    fn zero_capacity_stays_empty() {
        let mut buf = MemoryBuffer::new(0);
        let mut rng = Rng::new(0);
        buf.update((1..=50).map(sample), &mut rng);
        assert!(buf.is_empty());
        assert_eq!(buf.seen(), 50);
        assert!(buf.retrieve(10, &mut rng).is_empty());
    }

    #[test]
    fn size_law_under_fuzzed_batches() {
        let mut rng = Rng::new(11);
        for cap in [0usize, 1, 3, 17] {
            let mut buf = MemoryBuffer::new(cap);
            let mut pos = 0;
            for _ in 0..40 {
                let n = rng.below(7);
                buf.update(
                    (0..n).map(|_| {
                        pos += 1;
                        sample(pos)
                    }),
                    &mut rng,
                );
                assert_eq!(buf.len() as u64, buf.seen().min(cap as u64));
            }
        }
    }

    #[test]
    fn retrieve_under_fill_returns_all() {
        let mut rng = Rng::new(5);
        let mut buf = MemoryBuffer::new(10);
        buf.update((1..=3).map(sample), &mut rng);
        let mut got: Vec<u64> = buf
            .retrieve(10, &mut rng)
            .iter()
            .map(|s| s.stream_position)
            .collect();
        got.sort_unstable();
        assert_eq!(got, [1, 2, 3]);
        assert!(MemoryBuffer::new(4).retrieve(3, &mut rng).is_empty());
    }

    #[test]
    fn retrieve_has_no_duplicates() {
        let mut rng = Rng::new(8);
        let mut buf = MemoryBuffer::new(30);
        buf.update((1..=100).map(sample), &mut rng);
        for _ in 0..200 {
            let mut got: Vec<u64> = buf
                .retrieve(12, &mut rng)
                .iter()
                .map(|s| s.stream_position)
                .collect();
            assert_eq!(got.len(), 12);
            got.sort_unstable();
            got.dedup();
            assert_eq!(got.len(), 12);
        }
    }

    #[test]
    fn snapshot_parts_are_validated() {
        assert!(MemoryBuffer::from_parts(2, 5, vec![sample(1)]).is_err());
        assert!(MemoryBuffer::from_parts(2, 1, vec![sample(1)]).is_ok());
    }
}
