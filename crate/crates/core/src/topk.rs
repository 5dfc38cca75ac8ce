//! Bounded selection of the best-ranked candidates.
//!
//! Candidates rank by `(distance, index)` ascending. The comparator is a
//! total order, so merging per-chunk selections in any grouping yields the
//! same set as a full sort.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::engine::Candidate;
use crate::error::{Error, Result};

/// Heap entry ordered so the worst retained candidate sits on top.
#[derive(Debug, Clone)]
struct Ranked(Candidate);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.rank_cmp(&other.0)
    }
}

/// Keeps the `k` best candidates seen so far.
#[derive(Debug, Clone)]
pub struct TopK {
    k: usize,
    heap: BinaryHeap<Ranked>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Would `distance` at `index` make it into the current selection?
    pub fn admits(&self, distance: f64, index: u64) -> bool {
        if self.heap.len() < self.k {
            return true;
        }
        match self.heap.peek() {
            Some(worst) => distance
                .total_cmp(&worst.0.distance)
                .then(index.cmp(&worst.0.index))
                .is_lt(),
            None => false,
        }
    }

    pub fn push(&mut self, candidate: Candidate) {
        if self.k == 0 {
            return;
        }
        if self.heap.len() < self.k {
            self.heap.push(Ranked(candidate));
        } else if self.admits(candidate.distance, candidate.index) {
            self.heap.pop();
            self.heap.push(Ranked(candidate));
        }
    }

    pub fn merge(mut self, other: TopK) -> TopK {
        if other.heap.len() > self.heap.len() {
            return other.merge(self);
        }
        for Ranked(c) in other.heap {
            self.push(c);
        }
        self
    }

    /// Retained candidates, best first.
    pub fn into_sorted_vec(self) -> Vec<Candidate> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|r| r.0)
            .collect()
    }
}

/// The `k` best candidates of a stream, best first.
pub fn top_k<I>(candidates: I, k: usize) -> Result<Vec<Candidate>>
where
    I: IntoIterator<Item = Candidate>,
{
    let mut selection = TopK::new(k);
    let mut seen = 0usize;
    for c in candidates {
        seen += 1;
        selection.push(c);
    }
    if seen < k {
        return Err(Error::InsufficientCandidates {
            wanted: k,
            available: seen,
        });
    }
    Ok(selection.into_sorted_vec())
}
