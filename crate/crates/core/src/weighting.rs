//! BM25 term weighting and linear impact quantization.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::corpus::{Corpus, DocTable, Impact, RawSparseVector, SparseVector, TermId};
use crate::error::{Error, Result};
use crate::scalar::Weight;

fn cast<T: Weight>(value: f64) -> T {
    T::from_f64(value).expect("finite f64 converts to any float type")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params<T> {
    pub k1: T,
    pub b: T,
}

impl<T: Weight> Bm25Params<T> {
    pub fn new(k1: T, b: T) -> Result<Self> {
        if !(k1 > T::zero()) || !(b >= T::zero() && b <= T::one()) {
            return Err(Error::InvalidArgument(format!(
                "BM25 needs k1 > 0 and 0 <= b <= 1, got k1={k1} b={b}"
            )));
        }
        Ok(Self { k1, b })
    }
}

impl<T: Weight> Default for Bm25Params<T> {
    fn default() -> Self {
        Self { k1: cast(0.82), b: cast(0.68) }
    }
}

/// `idf * tf / (tf + k1 * (1 - b + b * doclen / avg_doclen))` with
/// `idf = ln(1 + (n_docs - df + 0.5) / (df + 0.5))`.
pub fn bm25_weight<T: Weight>(
    tf: u32,
    df: u64,
    doclen: u64,
    avg_doclen: T,
    n_docs: u64,
    params: &Bm25Params<T>,
) -> Result<T> {
    if !(avg_doclen > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "average document length must be positive, got {avg_doclen}"
        )));
    }
    if tf == 0 {
        return Ok(T::zero());
    }
    if df == 0 || df > n_docs {
        return Err(Error::InvalidArgument(format!(
            "document frequency {df} outside [1, {n_docs}]"
        )));
    }
    let half: T = cast(0.5);
    let df_t: T = cast(df as f64);
    let idf = (T::one() + (cast::<T>(n_docs as f64) - df_t + half) / (df_t + half)).ln();
    let tf_t: T = cast(f64::from(tf));
    let norm = T::one() - params.b + params.b * cast::<T>(doclen as f64) / avg_doclen;
    Ok(idf * tf_t / (tf_t + params.k1 * norm))
}

/// Replaces raw term counts with BM25 weights. Every weight must be an integer count.
pub fn bm25_corpus(
    docs: &[RawSparseVector],
    params: &Bm25Params<f64>,
) -> Result<Vec<RawSparseVector>> {
    let mut df: HashMap<&str, u64> = HashMap::new();
    let mut doclens = Vec::with_capacity(docs.len());
    for doc in docs {
        let mut len = 0u64;
        for (term, tf) in doc.entries() {
            if tf.fract() != 0.0 || *tf > f64::from(u32::MAX) {
                return Err(Error::InvalidArgument(format!(
                    "BM25 input needs integer term counts, `{term}` has {tf}"
                )));
            }
            *df.entry(term.as_str()).or_default() += 1;
            len += *tf as u64;
        }
        doclens.push(len);
    }
    if docs.is_empty() {
        return Ok(Vec::new());
    }
    let avg = doclens.iter().sum::<u64>() as f64 / docs.len() as f64;
    let n = docs.len() as u64;
    docs.iter()
        .zip(&doclens)
        .map(|(doc, &len)| {
            let entries = doc
                .entries()
                .iter()
                .map(|(term, tf)| {
                    bm25_weight(*tf as u32, df[term.as_str()], len, avg, n, params)
                        .map(|w| (term.clone(), w))
                })
                .collect::<Result<Vec<_>>>()?;
            RawSparseVector::new(entries)
        })
        .collect()
}

/// Global linear quantizer onto `1..=2^bits - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig<T> {
    bits: u8,
    global_max: T,
}

impl<T: Weight> QuantizerConfig<T> {
    pub fn new(bits: u8, global_max: T) -> Result<Self> {
        if !(2..=16).contains(&bits) {
            return Err(Error::InvalidArgument(format!("bits must be in [2, 16], got {bits}")));
        }
        if !(global_max > T::zero()) || !global_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "global max must be positive and finite, got {global_max}"
            )));
        }
        Ok(Self { bits, global_max })
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn global_max(&self) -> T {
        self.global_max
    }

    /// Largest representable impact, `2^bits - 1`.
    pub fn levels(&self) -> Impact {
        (1u32 << self.bits) - 1
    }

    pub fn quantize(&self, weight: T) -> Result<Impact> {
        if weight.is_nan() || weight < T::zero() || weight > self.global_max {
            return Err(Error::WeightOutOfRange {
                weight: weight.to_f64().unwrap_or(f64::NAN),
                max: self.global_max.to_f64().unwrap_or(f64::NAN),
            });
        }
        if weight == T::zero() {
            return Ok(0);
        }
        let levels: T = cast(f64::from(self.levels()));
        let scaled = (weight / self.global_max * levels).round();
        let impact = scaled.to_u32().expect("scaled weight lies in [0, levels]");
        Ok(impact.max(1))
    }

    pub fn dequantize(&self, impact: Impact) -> T {
        cast::<T>(f64::from(impact)) * self.global_max / cast(f64::from(self.levels()))
    }
}

/// Free-function form of [`QuantizerConfig::quantize`].
pub fn quantize<T: Weight>(weight: T, cfg: &QuantizerConfig<T>) -> Result<Impact> {
    cfg.quantize(weight)
}

/// Quantized term list, still keyed by term string.
pub type QuantizedTerms = Vec<(String, Impact)>;

/// Quantizes a set of vectors against their shared maximum weight.
///
/// Integer inputs that already fit in `bits` pass through unchanged.
pub fn quantize_vectors(
    vectors: &[RawSparseVector],
    bits: u8,
) -> Result<(Vec<QuantizedTerms>, QuantizerConfig<f64>)> {
    let global_max = vectors
        .iter()
        .flat_map(|v| v.entries().iter().map(|(_, w)| *w))
        .fold(0.0f64, f64::max);
    let levels = f64::from((1u32 << bits.min(16)) - 1);
    let integral = vectors.iter().all(RawSparseVector::is_integral)
        && vectors.iter().flat_map(|v| v.entries()).all(|(_, w)| *w <= levels);
    let cfg = QuantizerConfig::new(bits, if global_max > 0.0 { global_max } else { levels })?;

    let quantized = if integral {
        vectors
            .iter()
            .map(|v| v.entries().iter().map(|(t, w)| (t.clone(), *w as Impact)).collect())
            .collect()
    } else {
        vectors
            .par_iter()
            .map(|v| {
                v.entries()
                    .iter()
                    .map(|(t, w)| cfg.quantize(*w).map(|i| (t.clone(), i)))
                    .collect::<Result<QuantizedTerms>>()
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok((quantized, cfg))
}

/// [`quantize_vectors`] for a document collection, which must be non-empty.
pub fn quantize_corpus(
    docs: &[RawSparseVector],
    bits: u8,
) -> Result<(Vec<QuantizedTerms>, QuantizerConfig<f64>)> {
    if docs.is_empty() {
        return Err(Error::InvalidArgument("cannot quantize an empty corpus".into()));
    }
    quantize_vectors(docs, bits)
}

/// Optional BM25 weighting followed by quantization: raw corpus to indexable corpus.
pub fn prepare_corpus(
    doc_table: DocTable,
    raw: &[RawSparseVector],
    bits: u8,
    bm25: Option<&Bm25Params<f64>>,
) -> Result<(Corpus, QuantizerConfig<f64>)> {
    let weighted;
    let raw = match bm25 {
        Some(params) => {
            weighted = bm25_corpus(raw, params)?;
            &weighted[..]
        }
        None => raw,
    };
    let (quantized, cfg) = quantize_corpus(raw, bits)?;
    Ok((Corpus::from_quantized(doc_table, quantized)?, cfg))
}

/// Inner-product score of a query against a document.
pub fn score(query: &SparseVector, doc: &SparseVector) -> u64 {
    let (mut q, mut d) = (query.entries().iter().peekable(), doc.entries().iter().peekable());
    let mut total = 0u64;
    while let (Some(&&(qt, qw)), Some(&&(dt, dw))) = (q.peek(), d.peek()) {
        match qt.cmp(&dt) {
            std::cmp::Ordering::Less => {
                q.next();
            }
            std::cmp::Ordering::Greater => {
                d.next();
            }
            std::cmp::Ordering::Equal => {
                total += u64::from(qw) * u64::from(dw);
                q.next();
                d.next();
            }
        }
    }
    total
}

/// Expands a document into a token stream where each term repeats `impact` times.
pub fn pseudo_document(doc: &SparseVector) -> Vec<TermId> {
    doc.entries()
        .iter()
        .flat_map(|&(term, impact)| std::iter::repeat_n(term, impact as usize))
        .collect()
}

/// "Sum of term frequency" scoring over a token stream.
pub fn sum_tf_score(query: &SparseVector, tokens: &[TermId]) -> u64 {
    tokens
        .iter()
        .filter_map(|&t| query.get(t))
        .map(u64::from)
        .sum()
}
