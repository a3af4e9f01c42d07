//! Sparse top-k retrieval over quantized impact indexes.
//!
//! Two traversal families share one integer scoring core:
//!
//! - document-at-a-time ([`daat`]): exhaustive disjunction, WAND, Block-Max WAND
//!   and MaxScore over a docid-ordered index with term and block upper bounds;
//! - score-at-a-time ([`saat`]): impact-ordered segments processed in decreasing
//!   contribution order under a postings budget, with fixed-width accumulators.
//!
//! Real-valued weighting ([`weighting`]) is generic over the float type; the
//! accumulator table is generic over its unsigned cell type. The aliases below
//! pin the common instantiations.

pub mod bench;
pub mod corpus;
pub mod daat;
pub mod error;
pub mod eval;
pub mod index;
pub mod saat;
pub mod scalar;
pub mod synth;
pub mod topk;
pub mod weighting;

pub use corpus::{Corpus, DocId, SparseVector, TermId};
pub use error::{Error, Result};
pub use index::{DocumentOrderedIndex, ImpactOrderedIndex};
pub use topk::TopK;

/// BM25 parameters in double precision.
pub type Bm25Params64 = weighting::Bm25Params<f64>;
/// BM25 parameters in single precision.
pub type Bm25Params32 = weighting::Bm25Params<f32>;
/// Quantizer over double-precision weights.
pub type QuantizerConfig64 = weighting::QuantizerConfig<f64>;
/// Quantizer over single-precision weights.
pub type QuantizerConfig32 = weighting::QuantizerConfig<f32>;
/// 16-bit accumulator table.
pub type Accumulators16 = saat::AccumulatorTable<u16>;
/// 32-bit accumulator table.
pub type Accumulators32 = saat::AccumulatorTable<u32>;

/// Default result depth.
pub const DEFAULT_K: usize = 1000;
/// Default score-at-a-time postings budget.
pub const DEFAULT_RHO: u64 = 1_000_000;
