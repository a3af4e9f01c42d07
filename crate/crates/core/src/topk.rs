//! Bounded result set ordered by (score desc, docid asc).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::corpus::DocId;

type Key = (u64, Reverse<DocId>);

#[derive(Debug, Clone)]
pub struct TopK {
    k: usize,
    heap: BinaryHeap<Reverse<Key>>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self { k, heap: BinaryHeap::with_capacity(k.min(1 << 16) + 1) }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() >= self.k
    }

    /// Score of the k-th entry, or 0 while fewer than k entries are held.
    pub fn threshold(&self) -> u64 {
        if self.is_full() {
            self.heap.peek().map_or(0, |Reverse((score, _))| *score)
        } else {
            0
        }
    }

    /// Whether a document with this score, arriving after every held docid,
    /// would be admitted.
    pub fn would_admit(&self, score: u64) -> bool {
        !self.is_full() || score > self.threshold()
    }

    /// Offers a candidate; returns true if it was admitted.
    pub fn insert(&mut self, doc: DocId, score: u64) -> bool {
        if self.k == 0 {
            return false;
        }
        let key = (score, Reverse(doc));
        if self.heap.len() < self.k {
            self.heap.push(Reverse(key));
            return true;
        }
        let worst = self.heap.peek().expect("full heap is non-empty").0;
        if key > worst {
            self.heap.pop();
            self.heap.push(Reverse(key));
            true
        } else {
            false
        }
    }

    /// Entries sorted by score descending, then docid ascending.
    pub fn into_sorted_vec(self) -> Vec<(DocId, u64)> {
        let mut keys: Vec<Key> = self.heap.into_iter().map(|Reverse(k)| k).collect();
        keys.sort_unstable_by(|a, b| b.cmp(a));
        keys.into_iter().map(|(score, Reverse(doc))| (doc, score)).collect()
    }

    pub fn to_sorted_vec(&self) -> Vec<(DocId, u64)> {
        self.clone().into_sorted_vec()
    }
}
