//! Score-at-a-time anytime evaluation over an [`ImpactOrderedIndex`].
//!
//! Query-term segments are processed in decreasing order of contribution
//! (query weight times segment impact). A postings budget `rho` is checked at
//! segment boundaries only: a segment is started while fewer than `rho`
//! postings have been consumed and, once started, runs to completion.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};


use crate::corpus::{DocId, SparseVector, TermId};
use crate::error::{Error, Result};
use crate::index::ImpactOrderedIndex;
use crate::scalar::AccumulatorCell;
use crate::topk::TopK;

/// Per-document score registers of a fixed width.
///
/// Cells are reset in O(1) by bumping a generation counter; a cell whose stamp
/// is stale reads as zero.
#[derive(Debug, Clone)]
pub struct AccumulatorTable<A> {
    cells: Vec<A>,
    stamps: Vec<u32>,
    generation: u32,
    touched: Vec<u32>,
}

impl<A: AccumulatorCell> AccumulatorTable<A> {
    pub fn new(n_docs: usize) -> Self {
        Self { cells: vec![A::zero(); n_docs], stamps: vec![0; n_docs], generation: 1, touched: Vec::new() }
    }

    pub fn width(&self) -> u32 {
        A::BITS
    }

    pub fn n_docs(&self) -> usize {
        self.cells.len()
    }

    /// Zeroes every cell.
    pub fn reset(&mut self) {
        self.touched.clear();
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamps.fill(0);
            self.generation = 1;
        }
    }

    pub fn get(&self, doc: DocId) -> A {
        let i = doc.index();
        if self.stamps[i] == self.generation {
            self.cells[i]
        } else {
            A::zero()
        }
    }

    /// Adds `contribution` to `doc`; the cell is left unchanged on overflow.
    pub fn add(&mut self, doc: DocId, contribution: u64) -> Result<()> {
        let overflow = || Error::AccumulatorOverflow { doc, width: A::BITS };
        let delta: A = num_traits::cast(contribution).ok_or_else(overflow)?;
        let i = doc.index();
        if self.stamps[i] != self.generation {
            self.stamps[i] = self.generation;
            self.cells[i] = A::zero();
            self.touched.push(doc.0);
        }
        self.cells[i] = self.cells[i].checked_add(&delta).ok_or_else(overflow)?;
        Ok(())
    }

    /// Documents written since the last reset, in first-touch order.
    pub fn touched(&self) -> impl Iterator<Item = DocId> + '_ {
        self.touched.iter().map(|&d| DocId(d))
    }

    pub fn value(&self, doc: DocId) -> u64 {
        self.get(doc).to_u64().expect("unsigned cell fits in u64")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentPlanEntry {
    pub term: TermId,
    pub segment: usize,
    /// Query weight times segment impact.
    pub contribution: u64,
    pub length: usize,
}

/// Orders the query's segments by contribution, highest first; ties by
/// (term id, segment index).
pub fn plan_segments(query: &SparseVector, index: &ImpactOrderedIndex) -> Vec<SegmentPlanEntry> {
    let mut plan: Vec<SegmentPlanEntry> = query
        .entries()
        .iter()
        .filter_map(|&(term, weight)| index.segments(term).map(|segs| (term, weight, segs)))
        .flat_map(|(term, weight, segs)| {
            segs.iter().enumerate().map(move |(segment, seg)| SegmentPlanEntry {
                term,
                segment,
                contribution: u64::from(weight) * u64::from(seg.impact),
                length: seg.docids.len(),
            })
        })
        .collect();
    plan.sort_unstable_by_key(|e| (Reverse(e.contribution), e.term, e.segment));
    plan
}

/// Postings budget; `rho = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Budget {
    pub rho: Option<u64>,
    pub consumed: u64,
}

impl Budget {
    pub fn new(rho: Option<u64>) -> Self {
        Self { rho, consumed: 0 }
    }

    pub fn unbounded() -> Self {
        Self::new(None)
    }

    /// Whether another segment may be started.
    pub fn allows_start(&self) -> bool {
        self.rho.is_none_or(|rho| self.consumed < rho)
    }
}

/// Resumable walk over a segment plan.
#[derive(Debug)]
pub struct Traversal<'a> {
    plan: &'a [SegmentPlanEntry],
    index: &'a ImpactOrderedIndex,
    next: usize,
    budget: Budget,
}

impl<'a> Traversal<'a> {
    pub fn new(plan: &'a [SegmentPlanEntry], index: &'a ImpactOrderedIndex, budget: Budget) -> Self {
        Self { plan, index, next: 0, budget }
    }

    pub fn consumed(&self) -> u64 {
        self.budget.consumed
    }

    /// Segments processed so far.
    pub fn position(&self) -> usize {
        self.next
    }

    /// Processes the next segment if the plan and budget allow; returns whether it did.
    pub fn step<A: AccumulatorCell>(&mut self, acc: &mut AccumulatorTable<A>) -> Result<bool> {
        let Some(entry) = self.plan.get(self.next) else {
            return Ok(false);
        };
        if !self.budget.allows_start() {
            return Ok(false);
        }
        let segs = self.index.segments(entry.term).expect("planned term is indexed");
        for &doc in &segs[entry.segment].docids {
            acc.add(DocId(doc), entry.contribution)?;
        }
        self.budget.consumed += entry.length as u64;
        self.next += 1;
        Ok(true)
    }
}

/// Runs a plan to completion or budget exhaustion; returns postings consumed.
pub fn traverse<A: AccumulatorCell>(
    plan: &[SegmentPlanEntry],
    index: &ImpactOrderedIndex,
    budget: Budget,
    acc: &mut AccumulatorTable<A>,
) -> Result<u64> {
    let mut walk = Traversal::new(plan, index, budget);
    while walk.step(acc)? {}
    Ok(walk.consumed())
}

/// The k highest non-zero cells.
pub fn extract_topk<A: AccumulatorCell>(acc: &AccumulatorTable<A>, k: usize) -> TopK {
    let mut top = TopK::new(k);
    for doc in acc.touched() {
        let score = acc.value(doc);
        if score > 0 {
            top.insert(doc, score);
        }
    }
    top
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AccumulatorWidth {
    W16,
    #[default]
    W32,
}

impl AccumulatorWidth {
    pub fn bits(self) -> u32 {
        match self {
            Self::W16 => 16,
            Self::W32 => 32,
        }
    }
}

impl fmt::Display for AccumulatorWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits())
    }
}

impl FromStr for AccumulatorWidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "16" => Ok(Self::W16),
            "32" => Ok(Self::W32),
            _ => Err(Error::InvalidArgument(format!("accumulator width must be 16 or 32, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SaatOutcome {
    pub top: TopK,
    pub consumed: u64,
    pub elapsed: Duration,
}

/// Reusable score-at-a-time evaluator; owns one accumulator table per width.
#[derive(Debug)]
pub struct SaatSearcher<'a> {
    index: &'a ImpactOrderedIndex,
    acc16: Option<AccumulatorTable<u16>>,
    acc32: Option<AccumulatorTable<u32>>,
}

impl<'a> SaatSearcher<'a> {
    pub fn new(index: &'a ImpactOrderedIndex) -> Self {
        Self { index, acc16: None, acc32: None }
    }

    pub fn index(&self) -> &'a ImpactOrderedIndex {
        self.index
    }

    pub fn search(
        &mut self,
        query: &SparseVector,
        k: usize,
        rho: Option<u64>,
        width: AccumulatorWidth,
    ) -> Result<SaatOutcome> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let n_docs = self.index.n_docs();
        match width {
            AccumulatorWidth::W16 => {
                let acc = self.acc16.get_or_insert_with(|| AccumulatorTable::new(n_docs));
                run(self.index, acc, query, k, rho)
            }
            AccumulatorWidth::W32 => {
                let acc = self.acc32.get_or_insert_with(|| AccumulatorTable::new(n_docs));
                run(self.index, acc, query, k, rho)
            }
        }
    }
}

fn run<A: AccumulatorCell>(
    index: &ImpactOrderedIndex,
    acc: &mut AccumulatorTable<A>,
    query: &SparseVector,
    k: usize,
    rho: Option<u64>,
) -> Result<SaatOutcome> {
    let start = Instant::now();
    acc.reset();
    let plan = plan_segments(query, index);
    let consumed = traverse(&plan, index, Budget::new(rho), acc)?;
    let top = extract_topk(acc, k);
    Ok(SaatOutcome { top, consumed, elapsed: start.elapsed() })
}

/// One-shot score-at-a-time search.
pub fn saat_search(
    query: &SparseVector,
    index: &ImpactOrderedIndex,
    k: usize,
    rho: Option<u64>,
    width: AccumulatorWidth,
) -> Result<SaatOutcome> {
    SaatSearcher::new(index).search(query, k, rho, width)
}
