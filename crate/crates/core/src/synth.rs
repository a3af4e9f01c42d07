//! Seeded synthetic corpora and query workloads.
//!
//! Term popularity follows a Zipf law over the vocabulary so postings lengths
//! vary widely. Impacts are either one constant value (flat weights, no skipping
//! opportunities) or Zipf-distributed over `1..=max_impact` (a few large
//! impacts dominate, which is what DaaT pruning feeds on).

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::corpus::{Corpus, DocTable, Impact, RawSparseVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImpactDistribution {
    Uniform { impact: Impact },
    Zipf { exponent: f64, max_impact: Impact },
}

impl fmt::Display for ImpactDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform { impact } => write!(f, "uniform:{impact}"),
            Self::Zipf { exponent, max_impact } => write!(f, "zipf:{exponent}:{max_impact}"),
        }
    }
}

impl FromStr for ImpactDistribution {
    type Err = Error;

    /// `uniform[:impact]` or `zipf[:exponent[:max_impact]]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad impact distribution `{s}`"));
        let mut parts = s.split(':');
        match parts.next() {
            Some("uniform") => {
                let impact = parts.next().map_or(Ok(1), str::parse).map_err(|_| bad())?;
                if impact == 0 || parts.next().is_some() {
                    return Err(bad());
                }
                Ok(Self::Uniform { impact })
            }
            Some("zipf") => {
                let exponent = parts.next().map_or(Ok(1.2), str::parse).map_err(|_| bad())?;
                let max_impact = parts.next().map_or(Ok(255), str::parse).map_err(|_| bad())?;
                if !(exponent > 0.0) || max_impact == 0 || parts.next().is_some() {
                    return Err(bad());
                }
                Ok(Self::Zipf { exponent, max_impact })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_docs: usize,
    pub vocab: usize,
    /// Document lengths (distinct terms) are uniform in `[1, 2 * mean - 1]`.
    pub mean_doc_len: usize,
    /// Zipf exponent of term popularity.
    pub term_skew: f64,
    pub impacts: ImpactDistribution,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_docs: 10_000,
            vocab: 2_000,
            mean_doc_len: 30,
            term_skew: 1.0,
            impacts: ImpactDistribution::Zipf { exponent: 1.2, max_impact: 255 },
            seed: 42,
        }
    }
}

/// A generated document: name and integer-weighted terms.
pub type SyntheticDoc = (String, Vec<(String, Impact)>);

fn term_name(rank: usize) -> String {
    format!("t{rank}")
}

fn zipf(n: usize, exponent: f64) -> Result<Zipf<f64>> {
    Zipf::new(n as f64, exponent)
        .map_err(|e| Error::InvalidArgument(format!("zipf({n}, {exponent}): {e}")))
}

/// Deterministic corpus for a given config.
pub fn generate_corpus(cfg: &SyntheticConfig) -> Result<Vec<SyntheticDoc>> {
    if cfg.n_docs == 0 || cfg.vocab == 0 || cfg.mean_doc_len == 0 {
        return Err(Error::InvalidArgument("synthetic corpus parameters must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let terms = zipf(cfg.vocab, cfg.term_skew)?;
    let impacts = match cfg.impacts {
        ImpactDistribution::Zipf { exponent, max_impact } => Some(zipf(max_impact as usize, exponent)?),
        ImpactDistribution::Uniform { .. } => None,
    };
    let max_len = (2 * cfg.mean_doc_len - 1).min(cfg.vocab);

    let mut docs = Vec::with_capacity(cfg.n_docs);
    for d in 0..cfg.n_docs {
        let len = rng.random_range(1..=max_len);
        let mut chosen = BTreeSet::new();
        let mut attempts = 0;
        while chosen.len() < len && attempts < 20 * len {
            chosen.insert(terms.sample(&mut rng) as usize - 1);
            attempts += 1;
        }
        let doc_terms = chosen
            .into_iter()
            .map(|t| {
                let impact = match (&impacts, cfg.impacts) {
                    (Some(z), _) => z.sample(&mut rng) as Impact,
                    (None, ImpactDistribution::Uniform { impact }) => impact,
                    (None, ImpactDistribution::Zipf { .. }) => unreachable!(),
                };
                (term_name(t), impact)
            })
            .collect();
        docs.push((format!("doc{d}"), doc_terms));
    }
    Ok(docs)
}

/// Builds an indexable corpus from generated documents.
pub fn to_corpus(docs: &[SyntheticDoc]) -> Result<Corpus> {
    let table = DocTable::from_names(docs.iter().map(|(name, _)| name))?;
    Corpus::from_quantized(table, docs.iter().map(|(_, terms)| terms.clone()).collect())
}

/// Generated documents as integer-weighted raw vectors (e.g. term counts for BM25).
pub fn to_raw(docs: &[SyntheticDoc]) -> Result<(DocTable, Vec<RawSparseVector>)> {
    let table = DocTable::from_names(docs.iter().map(|(name, _)| name))?;
    let raw = docs
        .iter()
        .map(|(_, terms)| RawSparseVector::from_counts(terms.iter().map(|(t, w)| (t.clone(), u64::from(*w))).collect()))
        .collect::<Result<_>>()?;
    Ok((table, raw))
}

/// One record per line: `{"id": ..., "vector": {...}}`.
pub fn write_corpus_jsonl<W: Write>(mut out: W, docs: &[SyntheticDoc]) -> Result<()> {
    for (name, terms) in docs {
        let vector: serde_json::Map<String, serde_json::Value> =
            terms.iter().map(|(t, w)| (t.clone(), serde_json::Value::from(*w))).collect();
        let record = serde_json::json!({ "id": name, "vector": vector });
        writeln!(out, "{record}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryConfig {
    pub n_queries: usize,
    pub min_terms: usize,
    pub max_terms: usize,
    pub max_weight: Impact,
    pub seed: u64,
}

impl Default for QueryConfig {
    fn default() -> Self {
        Self { n_queries: 200, min_terms: 1, max_terms: 30, max_weight: 8, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticQueries {
    pub queries: Vec<SyntheticDoc>,
    /// `(qid, document name)` pairs judged relevant.
    pub relevant: Vec<(String, String)>,
}

/// Queries drawn from a target document's high-impact terms (topped up with popular terms);
/// the target document is the single relevant answer.
pub fn generate_queries(docs: &[SyntheticDoc], vocab: usize, cfg: &QueryConfig) -> Result<SyntheticQueries> {
    if docs.is_empty() || cfg.min_terms == 0 || cfg.min_terms > cfg.max_terms || cfg.max_weight == 0 {
        return Err(Error::InvalidArgument("invalid synthetic query parameters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let popular = zipf(vocab.max(1), 1.0)?;
    let mut queries = Vec::with_capacity(cfg.n_queries);
    let mut relevant = Vec::with_capacity(cfg.n_queries);
    for q in 0..cfg.n_queries {
        let (target, target_terms) = &docs[rng.random_range(0..docs.len())];
        let want = rng.random_range(cfg.min_terms..=cfg.max_terms);
        // draw the doc-side terms from the target's strongest terms
        let from_doc_n = want.div_ceil(2).max(1);
        let mut strongest: Vec<&(String, Impact)> = target_terms.iter().collect();
        strongest.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        strongest.truncate(2 * from_doc_n);
        strongest.shuffle(&mut rng);
        let mut chosen: BTreeSet<String> =
            strongest.into_iter().take(from_doc_n).map(|(t, _)| t.clone()).collect();
        let mut attempts = 0;
        while chosen.len() < want && attempts < 20 * want {
            chosen.insert(term_name(popular.sample(&mut rng) as usize - 1));
            attempts += 1;
        }
        let terms = chosen.into_iter().map(|t| (t, rng.random_range(1..=cfg.max_weight))).collect();
        let qid = format!("q{q}");
        relevant.push((qid.clone(), target.clone()));
        queries.push((qid, terms));
    }
    Ok(SyntheticQueries { queries, relevant })
}

/// `qid<TAB>term:weight ...` lines.
pub fn write_queries<W: Write>(mut out: W, queries: &[SyntheticDoc]) -> Result<()> {
    for (qid, terms) in queries {
        let body: Vec<String> = terms.iter().map(|(t, w)| format!("{t}:{w}")).collect();
        writeln!(out, "{qid}\t{}", body.join(" "))?;
    }
    Ok(())
}

/// `qid 0 docname 1` lines.
pub fn write_qrels<W: Write>(mut out: W, relevant: &[(String, String)]) -> Result<()> {
    for (qid, doc) in relevant {
        writeln!(out, "{qid} 0 {doc} 1")?;
    }
    Ok(())
}
