//! Document-ordered and impact-ordered inverted indexes.

pub mod codec;
pub mod format;

use rayon::prelude::*;

use crate::corpus::{Corpus, DocId, DocTable, Impact, Lexicon, SparseVector, TermId};
use crate::error::{Error, Result};

use codec::{BLOCK_SIZE, MAX_POSTING_IMPACT};

pub use format::{read_index, write_index, AnyIndex, IndexLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockMeta {
    pub last_docid: DocId,
    pub block_max_impact: Impact,
    /// Byte position of the encoded block within its list's postings.
    pub offset: u64,
}

/// One term's docid-ordered postings with term-level and block-level maxima.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostingsList {
    term: TermId,
    docids: Vec<u32>,
    impacts: Vec<Impact>,
    max_impact: Impact,
    blocks: Vec<BlockMeta>,
    encoded: Vec<u8>,
}

impl PostingsList {
    /// `docids` must be strictly ascending; impacts in `[1, 65535]`.
    pub fn new(term: TermId, docids: Vec<u32>, impacts: Vec<Impact>) -> Result<Self> {
        if docids.len() != impacts.len() {
            return Err(Error::InvalidArgument(format!(
                "{} docids but {} impacts for {term}",
                docids.len(),
                impacts.len()
            )));
        }
        if docids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!("docids of {term} are not strictly ascending")));
        }
        let mut blocks = Vec::with_capacity(docids.len().div_ceil(BLOCK_SIZE));
        let mut encoded = Vec::new();
        let mut previous = None;
        for (ids, imps) in docids.chunks(BLOCK_SIZE).zip(impacts.chunks(BLOCK_SIZE)) {
            let gaps = codec::docid_gaps(previous, ids);
            let offset = encoded.len() as u64;
            encoded.extend(codec::encode_block(&gaps, imps)?);
            let last = *ids.last().expect("chunks are non-empty");
            blocks.push(BlockMeta {
                last_docid: DocId(last),
                block_max_impact: *imps.iter().max().expect("chunks are non-empty"),
                offset,
            });
            previous = Some(last);
        }
        let max_impact = impacts.iter().copied().max().unwrap_or(0);
        Ok(Self { term, docids, impacts, max_impact, blocks, encoded })
    }

    pub fn term(&self) -> TermId {
        self.term
    }

    pub fn df(&self) -> usize {
        self.docids.len()
    }

    pub fn docids(&self) -> &[u32] {
        &self.docids
    }

    pub fn impacts(&self) -> &[Impact] {
        &self.impacts
    }

    pub fn max_impact(&self) -> Impact {
        self.max_impact
    }

    pub fn blocks(&self) -> &[BlockMeta] {
        &self.blocks
    }

    /// Compressed postings bytes.
    pub fn encoded(&self) -> &[u8] {
        &self.encoded
    }

    pub fn iter(&self) -> impl Iterator<Item = (DocId, Impact)> + '_ {
        self.docids.iter().zip(&self.impacts).map(|(&d, &i)| (DocId(d), i))
    }
}

/// Docid-ordered layout for document-at-a-time traversal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentOrderedIndex {
    pub(crate) lexicon: Lexicon,
    pub(crate) postings: Vec<PostingsList>,
    pub(crate) doc_table: DocTable,
    pub(crate) doc_lens: Vec<u64>,
}

impl DocumentOrderedIndex {
    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn doc_table(&self) -> &DocTable {
        &self.doc_table
    }

    /// Sum of impacts per document.
    pub fn doc_lens(&self) -> &[u64] {
        &self.doc_lens
    }

    pub fn n_docs(&self) -> usize {
        self.doc_table.len()
    }

    pub fn postings(&self, term: TermId) -> Option<&PostingsList> {
        self.postings.get(term.index())
    }

    pub fn lists(&self) -> &[PostingsList] {
        &self.postings
    }

    pub fn total_postings(&self) -> u64 {
        self.postings.iter().map(|p| p.df() as u64).sum()
    }

    /// Rebuilds the forward (per-document) vectors from the postings.
    pub fn document_vectors(&self) -> Vec<SparseVector> {
        let mut forward: Vec<Vec<(TermId, Impact)>> = vec![Vec::new(); self.n_docs()];
        for list in &self.postings {
            for (doc, impact) in list.iter() {
                forward[doc.index()].push((list.term(), impact));
            }
        }
        // lists are visited in term order, so every row is already sorted
        forward.into_iter().map(|e| SparseVector::new(e).expect("postings are valid")).collect()
    }
}

/// Run of documents sharing one impact value within a term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactSegment {
    pub impact: Impact,
    pub docids: Vec<u32>,
}

/// Impact-ordered layout for score-at-a-time traversal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactOrderedIndex {
    pub(crate) lexicon: Lexicon,
    pub(crate) segments: Vec<Vec<ImpactSegment>>,
    pub(crate) doc_table: DocTable,
    pub(crate) doc_lens: Vec<u64>,
    pub(crate) total_postings: u64,
}

impl ImpactOrderedIndex {
    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn doc_table(&self) -> &DocTable {
        &self.doc_table
    }

    pub fn doc_lens(&self) -> &[u64] {
        &self.doc_lens
    }

    pub fn n_docs(&self) -> usize {
        self.doc_table.len()
    }

    /// Segments of `term` in strictly descending impact order.
    pub fn segments(&self, term: TermId) -> Option<&[ImpactSegment]> {
        self.segments.get(term.index()).map(Vec::as_slice)
    }

    pub fn all_segments(&self) -> &[Vec<ImpactSegment>] {
        &self.segments
    }

    pub fn total_postings(&self) -> u64 {
        self.total_postings
    }
}

fn invert(corpus: &Corpus) -> Result<Vec<Vec<(u32, Impact)>>> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("cannot index an empty corpus".into()));
    }
    let mut inverted: Vec<Vec<(u32, Impact)>> = vec![Vec::new(); corpus.lexicon.len()];
    for (doc, vector) in corpus.docs.iter().enumerate() {
        for &(term, impact) in vector.entries() {
            if impact > MAX_POSTING_IMPACT {
                return Err(Error::InvalidArgument(format!(
                    "impact {impact} of {term} in d{doc} exceeds {MAX_POSTING_IMPACT}"
                )));
            }
            let list = inverted.get_mut(term.index()).ok_or_else(|| {
                Error::InvalidArgument(format!("{term} missing from the lexicon"))
            })?;
            list.push((doc as u32, impact));
        }
    }
    Ok(inverted)
}

fn doc_lens(corpus: &Corpus) -> Vec<u64> {
    corpus.docs.iter().map(|d| d.total_impact()).collect()
}

pub fn build_document_ordered(corpus: &Corpus) -> Result<DocumentOrderedIndex> {
    let inverted = invert(corpus)?;
    let postings = inverted
        .into_par_iter()
        .enumerate()
        .map(|(term, list)| {
            let (docids, impacts) = list.into_iter().unzip();
            PostingsList::new(TermId(term as u32), docids, impacts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DocumentOrderedIndex {
        lexicon: corpus.lexicon.clone(),
        postings,
        doc_table: corpus.doc_table.clone(),
        doc_lens: doc_lens(corpus),
    })
}

/// Groups docid-ascending postings into segments of equal impact, highest first.
pub fn group_by_impact(postings: &[(u32, Impact)]) -> Vec<ImpactSegment> {
    let mut sorted = postings.to_vec();
    sorted.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut segments: Vec<ImpactSegment> = Vec::new();
    for (doc, impact) in sorted {
        match segments.last_mut() {
            Some(seg) if seg.impact == impact => seg.docids.push(doc),
            _ => segments.push(ImpactSegment { impact, docids: vec![doc] }),
        }
    }
    segments
}

pub fn build_impact_ordered(corpus: &Corpus) -> Result<ImpactOrderedIndex> {
    let inverted = invert(corpus)?;
    let total_postings = inverted.iter().map(|l| l.len() as u64).sum();
    let segments = inverted.par_iter().map(|list| group_by_impact(list)).collect();
    Ok(ImpactOrderedIndex {
        lexicon: corpus.lexicon.clone(),
        segments,
        doc_table: corpus.doc_table.clone(),
        doc_lens: doc_lens(corpus),
        total_postings,
    })
}
