//! Document-at-a-time top-k evaluation over a [`DocumentOrderedIndex`].
//!
//! All four strategies are rank-safe: they return the same `(docid, score)` list
//! as exhaustive disjunction, with ties broken by smaller docid. Scores are
//! integer inner products of query weights and posting impacts.

use std::fmt;
use std::str::FromStr;

use crate::corpus::{DocId, SparseVector, TermId};
use crate::error::{Error, Result};
use crate::index::{DocumentOrderedIndex, PostingsList};
use crate::topk::TopK;

const END: u32 = u32::MAX;

/// Work performed by one query evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkCounters {
    /// Candidate documents evaluated (fully or until an early exit).
    pub docs_scored: u64,
    /// Postings whose impact was added into a document score.
    pub postings_visited: u64,
    /// Block-level rejections (Block-Max WAND only).
    pub blocks_skipped: u64,
    /// Pivot selections (WAND and Block-Max WAND).
    pub pivot_selections: u64,
}

/// Position within one query term's postings.
#[derive(Debug, Clone)]
pub struct Cursor<'a> {
    term: TermId,
    weight: u64,
    list: &'a PostingsList,
    pos: usize,
    doc: u32,
    max_score: u64,
}

impl<'a> Cursor<'a> {
    pub fn new(term: TermId, weight: u32, list: &'a PostingsList) -> Self {
        let weight = u64::from(weight);
        let mut cursor = Self { term, weight, list, pos: 0, doc: END, max_score: weight * u64::from(list.max_impact()) };
        cursor.sync();
        cursor
    }

    fn sync(&mut self) {
        self.doc = self.list.docids().get(self.pos).copied().unwrap_or(END);
    }

    pub fn term(&self) -> TermId {
        self.term
    }

    pub fn query_weight(&self) -> u64 {
        self.weight
    }

    /// Term upper bound: query weight times the list's maximum impact.
    pub fn max_score(&self) -> u64 {
        self.max_score
    }

    /// Current docid, or `u32::MAX` once exhausted.
    #[inline]
    pub fn docid(&self) -> u32 {
        self.doc
    }

    pub fn impact(&self) -> u32 {
        self.list.impacts()[self.pos]
    }

    /// Contribution of the current posting.
    pub fn score(&self) -> u64 {
        self.weight * u64::from(self.impact())
    }

    pub fn next(&mut self) {
        if self.pos < self.list.df() {
            self.pos += 1;
            self.sync();
        }
    }

    fn block_at_or_after(&self, target: u32) -> Option<usize> {
        let blocks = self.list.blocks();
        let from = self.pos / crate::index::codec::BLOCK_SIZE;
        let tail = blocks.get(from..)?;
        let i = from + tail.partition_point(|b| b.last_docid.0 < target);
        (i < blocks.len()).then_some(i)
    }

    /// Moves to the first posting with docid >= `target`, using block last-docids
    /// to skip whole blocks.
    pub fn next_geq(&mut self, target: u32) {
        if self.docid() >= target {
            return;
        }
        let Some(block) = self.block_at_or_after(target) else {
            self.pos = self.list.df();
            self.doc = END;
            return;
        };
        let start = self.pos.max(block * crate::index::codec::BLOCK_SIZE);
        let end = ((block + 1) * crate::index::codec::BLOCK_SIZE).min(self.list.df());
        self.pos = start + self.list.docids()[start..end].partition_point(|&d| d < target);
        self.sync();
    }

    /// Upper bound and last docid of the block that would hold `target`,
    /// without moving the cursor.
    pub fn block_bound(&self, target: u32) -> Option<(u64, u32)> {
        self.block_at_or_after(target).map(|i| {
            let meta = &self.list.blocks()[i];
            (self.weight * u64::from(meta.block_max_impact), meta.last_docid.0)
        })
    }
}

/// Sum of contributions of the cursors positioned at `doc`.
pub fn score_document(cursors: &[Cursor<'_>], doc: DocId) -> u64 {
    cursors.iter().filter(|c| c.docid() == doc.0).map(Cursor::score).sum()
}

fn open_cursors<'a>(query: &SparseVector, index: &'a DocumentOrderedIndex) -> Vec<Cursor<'a>> {
    query
        .entries()
        .iter()
        .filter_map(|&(term, weight)| {
            let list = index.postings(term)?;
            (list.df() > 0).then(|| Cursor::new(term, weight, list))
        })
        .collect()
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    Ok(())
}

/// Scores every document that matches at least one query term.
pub fn exhaustive_or(
    query: &SparseVector,
    index: &DocumentOrderedIndex,
    k: usize,
) -> Result<(TopK, WorkCounters)> {
    check_k(k)?;
    let mut cursors = open_cursors(query, index);
    let mut top = TopK::new(k);
    let mut counters = WorkCounters::default();
    loop {
        let doc = cursors.iter().map(Cursor::docid).min().unwrap_or(END);
        if doc == END {
            break;
        }
        let mut score = 0;
        for c in cursors.iter_mut().filter(|c| c.docid() == doc) {
            score += c.score();
            counters.postings_visited += 1;
            c.next();
        }
        counters.docs_scored += 1;
        top.insert(DocId(doc), score);
    }
    Ok((top, counters))
}

fn sort_by_docid(cursors: &mut [Cursor<'_>]) {
    // only the advanced prefix is out of place; the stable sort exploits the sorted run
    cursors.sort_by_key(|c| (c.doc, c.term));
}

/// First index whose prefix sum of term upper bounds could enter the top-k.
fn find_pivot(cursors: &[Cursor<'_>], top: &TopK) -> Option<usize> {
    let mut bound = 0;
    for (i, c) in cursors.iter().enumerate() {
        if c.docid() == END {
            return None;
        }
        bound += c.max_score;
        if top.would_admit(bound) {
            return Some(i);
        }
    }
    None
}

/// Scores the aligned prefix of cursors sitting on `doc` and advances them.
fn evaluate_aligned(
    cursors: &mut [Cursor<'_>],
    doc: u32,
    top: &mut TopK,
    counters: &mut WorkCounters,
) {
    let mut score = 0;
    for c in cursors.iter_mut().take_while(|c| c.docid() == doc) {
        score += c.score();
        counters.postings_visited += 1;
        c.next();
    }
    counters.docs_scored += 1;
    top.insert(DocId(doc), score);
}

fn advance_to(cursors: &mut [Cursor<'_>], target: u32) {
    for c in cursors.iter_mut().filter(|c| c.docid() < target) {
        c.next_geq(target);
    }
}

/// WAND: pivot on cumulative term upper bounds, skip docs that cannot enter.
pub fn wand(
    query: &SparseVector,
    index: &DocumentOrderedIndex,
    k: usize,
) -> Result<(TopK, WorkCounters)> {
    check_k(k)?;
    let mut cursors = open_cursors(query, index);
    let mut top = TopK::new(k);
    let mut counters = WorkCounters::default();
    loop {
        sort_by_docid(&mut cursors);
        let Some(pivot) = find_pivot(&cursors, &top) else {
            break;
        };
        counters.pivot_selections += 1;
        let pivot_doc = cursors[pivot].docid();
        if cursors[0].docid() == pivot_doc {
            evaluate_aligned(&mut cursors, pivot_doc, &mut top, &mut counters);
        } else {
            advance_to(&mut cursors[..pivot], pivot_doc);
        }
    }
    Ok((top, counters))
}

/// Block-Max WAND: WAND pivoting refined by per-block maxima.
pub fn bmw(
    query: &SparseVector,
    index: &DocumentOrderedIndex,
    k: usize,
) -> Result<(TopK, WorkCounters)> {
    check_k(k)?;
    let mut cursors = open_cursors(query, index);
    let mut top = TopK::new(k);
    let mut counters = WorkCounters::default();
    loop {
        sort_by_docid(&mut cursors);
        let Some(pivot) = find_pivot(&cursors, &top) else {
            break;
        };
        counters.pivot_selections += 1;
        let pivot_doc = cursors[pivot].docid();
        let mut last = pivot;
        while last + 1 < cursors.len() && cursors[last + 1].docid() == pivot_doc {
            last += 1;
        }

        let mut block_bound = 0;
        let mut skip_to = cursors.get(last + 1).map_or(END, Cursor::docid);
        for c in &cursors[..=last] {
            // a cursor with no block at or after the pivot contributes nothing there
            if let Some((bound, block_last)) = c.block_bound(pivot_doc) {
                block_bound += bound;
                skip_to = skip_to.min(block_last.saturating_add(1));
            }
        }

        if top.would_admit(block_bound) {
            if cursors[0].docid() == pivot_doc {
                evaluate_aligned(&mut cursors, pivot_doc, &mut top, &mut counters);
            } else {
                advance_to(&mut cursors[..pivot], pivot_doc);
            }
        } else {
            // nothing in [pivot_doc, skip_to) can beat the threshold
            counters.blocks_skipped += 1;
            advance_to(&mut cursors[..=last], skip_to);
        }
    }
    Ok((top, counters))
}

/// MaxScore: essential lists drive candidates, non-essential lists are probed
/// only while the remaining upper bound can still lift a document past the threshold.
pub fn maxscore(
    query: &SparseVector,
    index: &DocumentOrderedIndex,
    k: usize,
) -> Result<(TopK, WorkCounters)> {
    check_k(k)?;
    let mut cursors = open_cursors(query, index);
    cursors.sort_unstable_by_key(|c| (c.max_score, c.term));
    let upper_bounds: Vec<u64> = cursors
        .iter()
        .scan(0u64, |acc, c| {
            *acc += c.max_score;
            Some(*acc)
        })
        .collect();

    let mut top = TopK::new(k);
    let mut counters = WorkCounters::default();
    let mut first_essential = 0;

    while first_essential < cursors.len() {
        let doc = cursors[first_essential..].iter().map(Cursor::docid).min().unwrap_or(END);
        if doc == END {
            break;
        }
        counters.docs_scored += 1;

        let mut score = 0;
        for c in cursors[first_essential..].iter_mut().filter(|c| c.docid() == doc) {
            score += c.score();
            counters.postings_visited += 1;
            c.next();
        }

        let mut complete = true;
        for i in (0..first_essential).rev() {
            if !top.would_admit(score + upper_bounds[i]) {
                complete = false;
                break;
            }
            let c = &mut cursors[i];
            c.next_geq(doc);
            if c.docid() == doc {
                score += c.score();
                counters.postings_visited += 1;
            }
        }

        if complete && top.insert(DocId(doc), score) {
            while first_essential < cursors.len() && !top.would_admit(upper_bounds[first_essential]) {
                first_essential += 1;
            }
        }
    }
    Ok((top, counters))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DaatAlgorithm {
    Or,
    Wand,
    Bmw,
    MaxScore,
}

impl DaatAlgorithm {
    pub const ALL: [DaatAlgorithm; 4] = [Self::Or, Self::Wand, Self::Bmw, Self::MaxScore];

    pub fn name(self) -> &'static str {
        match self {
            Self::Or => "or",
            Self::Wand => "wand",
            Self::Bmw => "bmw",
            Self::MaxScore => "maxscore",
        }
    }

    pub fn search(
        self,
        query: &SparseVector,
        index: &DocumentOrderedIndex,
        k: usize,
    ) -> Result<(TopK, WorkCounters)> {
        match self {
            Self::Or => exhaustive_or(query, index, k),
            Self::Wand => wand(query, index, k),
            Self::Bmw => bmw(query, index, k),
            Self::MaxScore => maxscore(query, index, k),
        }
    }
}

impl fmt::Display for DaatAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DaatAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown DaaT engine `{s}`")))
    }
}
