//! Pre-weighted corpora, queries and relevance judgments.
//!
//! Documents and queries arrive as explicit `term -> weight` maps, one record
//! per line. Parsing keeps term strings; [`Corpus::from_quantized`] interns them
//! into dense [`TermId`]s once the weights are integers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use log::warn;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Integer impact score.
pub type Impact = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TermId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DocId(pub u32);

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.0)
    }
}

impl DocId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Quantized bag of words: strictly increasing term ids, every impact >= 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseVector {
    entries: Vec<(TermId, Impact)>,
}

impl SparseVector {
    pub fn new(entries: Vec<(TermId, Impact)>) -> Result<Self> {
        for pair in entries.windows(2) {
            if pair[0].0 >= pair[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "term ids must be strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        if let Some((term, _)) = entries.iter().find(|(_, impact)| *impact == 0) {
            return Err(Error::InvalidArgument(format!("zero impact for {term}")));
        }
        Ok(Self { entries })
    }

    /// Sorts by term id first; duplicates are still rejected.
    pub fn from_unsorted(mut entries: Vec<(TermId, Impact)>) -> Result<Self> {
        entries.sort_unstable_by_key(|(term, _)| *term);
        Self::new(entries)
    }

    pub fn entries(&self) -> &[(TermId, Impact)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of impacts (the "total terms" of a pseudo-document).
    pub fn total_impact(&self) -> u64 {
        self.entries.iter().map(|&(_, w)| u64::from(w)).sum()
    }

    pub fn get(&self, term: TermId) -> Option<Impact> {
        self.entries
            .binary_search_by_key(&term, |(t, _)| *t)
            .ok()
            .map(|i| self.entries[i].1)
    }
}

/// Term weights before quantization, sorted by term string.
///
/// Remembers whether the weights were given as integers; only integer input is
/// eligible for quantizer pass-through.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawSparseVector {
    entries: Vec<(String, f64)>,
    integral: bool,
}

impl RawSparseVector {
    /// Real-valued weights. Drops zero weights and normalizes term order.
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        Self::build(entries, false)
    }

    /// Integer weights (term counts or pre-quantized impacts).
    pub fn from_counts(entries: Vec<(String, u64)>) -> Result<Self> {
        Self::build(entries.into_iter().map(|(t, w)| (t, w as f64)).collect(), true)
    }

    fn build(mut entries: Vec<(String, f64)>, integral: bool) -> Result<Self> {
        for (term, weight) in &entries {
            if !weight.is_finite() || *weight < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "weight for `{term}` must be finite and non-negative, got {weight}"
                )));
            }
        }
        entries.retain(|(_, w)| *w > 0.0);
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(pair) = entries.windows(2).find(|p| p[0].0 == p[1].0) {
            return Err(Error::Duplicate { kind: "term", id: pair[0].0.clone() });
        }
        // an empty vector is vacuously integral
        let integral = integral || entries.is_empty();
        Ok(Self { entries, integral })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn is_integral(&self) -> bool {
        self.integral
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Bijection between external document names and dense [`DocId`]s.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocTable {
    names: Vec<String>,
    by_name: HashMap<String, DocId>,
}

impl DocTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str) -> Result<DocId> {
        if self.by_name.contains_key(name) {
            return Err(Error::Duplicate { kind: "document", id: name.to_string() });
        }
        let id = DocId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table = Self::new();
        for name in names {
            table.push(name.as_ref())?;
        }
        Ok(table)
    }

    pub fn name(&self, doc: DocId) -> &str {
        &self.names[doc.index()]
    }

    pub fn get(&self, name: &str) -> Option<DocId> {
        self.by_name.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Term strings interned in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    terms: Vec<String>,
    ids: HashMap<String, TermId>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, term: &str) -> TermId {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = TermId(self.terms.len() as u32);
        self.terms.push(term.to_string());
        self.ids.insert(term.to_string(), id);
        id
    }

    pub fn from_terms<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lexicon = Self::new();
        for term in terms {
            let term = term.as_ref();
            if lexicon.ids.contains_key(term) {
                return Err(Error::Duplicate { kind: "term", id: term.to_string() });
            }
            lexicon.intern(term);
        }
        Ok(lexicon)
    }

    pub fn get(&self, term: &str) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id.index()]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maps integer-weighted terms onto this lexicon; unknown terms are dropped.
    pub fn vectorize(&self, terms: &[(String, Impact)]) -> SparseVector {
        let entries = terms
            .iter()
            .filter(|(_, w)| *w > 0)
            .filter_map(|(t, w)| self.get(t).map(|id| (id, *w)))
            .collect();
        SparseVector::from_unsorted(entries).expect("terms are unique and impacts positive")
    }
}

/// A quantized collection ready for indexing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub doc_table: DocTable,
    pub lexicon: Lexicon,
    pub docs: Vec<SparseVector>,
}

impl Corpus {
    /// Interns terms in document order, then term order within each document.
    pub fn from_quantized(doc_table: DocTable, docs: Vec<Vec<(String, Impact)>>) -> Result<Self> {
        if doc_table.len() != docs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} document names for {} vectors",
                doc_table.len(),
                docs.len()
            )));
        }
        let mut lexicon = Lexicon::new();
        let mut vectors = Vec::with_capacity(docs.len());
        for doc in docs {
            let mut seen = HashSet::with_capacity(doc.len());
            let mut entries = Vec::with_capacity(doc.len());
            for (term, impact) in doc {
                if impact == 0 {
                    continue;
                }
                if !seen.insert(term.clone()) {
                    return Err(Error::Duplicate { kind: "term", id: term });
                }
                entries.push((lexicon.intern(&term), impact));
            }
            vectors.push(SparseVector::from_unsorted(entries)?);
        }
        Ok(Self { doc_table, lexicon, docs: vectors })
    }

    /// Builds a corpus directly from term-id vectors; term names are `t<id>`.
    pub fn from_vectors(docs: Vec<SparseVector>) -> Self {
        let vocab = docs
            .iter()
            .flat_map(|d| d.entries().iter().map(|(t, _)| t.0 + 1))
            .max()
            .unwrap_or(0);
        let lexicon = Lexicon::from_terms((0..vocab).map(|t| format!("t{t}")))
            .expect("generated names are unique");
        let doc_table = DocTable::from_names((0..docs.len()).map(|d| format!("d{d}")))
            .expect("generated names are unique");
        Self { doc_table, lexicon, docs }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

#[derive(Deserialize)]
struct Record {
    id: String,
    vector: BTreeMap<String, serde_json::Number>,
}

fn parse_record(line: &str, lineno: usize) -> Result<(String, RawSparseVector)> {
    let parse_err = |message: String| Error::Parse { line: lineno, message };
    let record: Record = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
    let vector = if record.vector.values().all(serde_json::Number::is_u64) {
        let counts = record.vector.into_iter().map(|(t, w)| (t, w.as_u64().unwrap_or_default()));
        RawSparseVector::from_counts(counts.collect())
    } else {
        let weights = record.vector.into_iter().map(|(t, w)| (t, w.as_f64().unwrap_or(f64::NAN)));
        RawSparseVector::new(weights.collect())
    }
    .map_err(|e| parse_err(e.to_string()))?;
    Ok((record.id, vector))
}

fn parse_tsv_query(line: &str, lineno: usize) -> Result<(String, RawSparseVector)> {
    let parse_err = |message: String| Error::Parse { line: lineno, message };
    let (qid, rest) = line
        .split_once('\t')
        .ok_or_else(|| parse_err("expected `qid<TAB>term:weight ...`".into()))?;
    let mut entries = Vec::new();
    let mut integral = true;
    for token in rest.split_whitespace() {
        let (term, weight) = token
            .rsplit_once(':')
            .ok_or_else(|| parse_err(format!("token `{token}` is not term:weight")))?;
        integral &= weight.parse::<u64>().is_ok();
        let weight: f64 = weight
            .parse()
            .map_err(|_| parse_err(format!("bad weight in `{token}`")))?;
        entries.push((term.to_string(), weight));
    }
    let vector = if integral {
        RawSparseVector::from_counts(entries.into_iter().map(|(t, w)| (t, w as u64)).collect())
    } else {
        RawSparseVector::new(entries)
    }
    .map_err(|e| parse_err(e.to_string()))?;
    Ok((qid.to_string(), vector))
}

/// Reads `{"id": ..., "vector": {...}}` records, one per line.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<(DocTable, Vec<RawSparseVector>)> {
    let mut table = DocTable::new();
    let mut vectors = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, vector) = parse_record(&line, i + 1)?;
        table.push(&id)?;
        vectors.push(vector);
    }
    Ok((table, vectors))
}

/// Reads queries as JSON records or `qid<TAB>term:weight ...` lines (detected per line).
pub fn parse_queries<R: BufRead>(reader: R) -> Result<Vec<(String, RawSparseVector)>> {
    let mut seen = HashSet::new();
    let mut queries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (qid, vector) = if line.trim_start().starts_with('{') {
            parse_record(&line, i + 1)?
        } else {
            parse_tsv_query(&line, i + 1)?
        };
        if !seen.insert(qid.clone()) {
            return Err(Error::Duplicate { kind: "query", id: qid });
        }
        if vector.is_empty() {
            warn!("query {qid} has no positive weights");
        }
        queries.push((qid, vector));
    }
    Ok(queries)
}

/// Writes queries in the TSV form accepted by [`parse_queries`].
pub fn write_queries_tsv<W: Write>(mut out: W, queries: &[(String, RawSparseVector)]) -> Result<()> {
    for (qid, vector) in queries {
        write!(out, "{qid}\t")?;
        for (i, (term, weight)) in vector.entries().iter().enumerate() {
            if i > 0 {
                write!(out, " ")?;
            }
            if vector.is_integral() {
                write!(out, "{term}:{weight}")?;
            } else {
                // `{:?}` keeps a fractional part, so real weights stay real on re-read
                write!(out, "{term}:{weight:?}")?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Graded relevance judgments keyed by query then document name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: HashMap<String, HashMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the previous grade if one was overwritten.
    pub fn insert(&mut self, qid: &str, doc: &str, grade: u32) -> Option<u32> {
        self.judgments
            .entry(qid.to_string())
            .or_default()
            .insert(doc.to_string(), grade)
    }

    pub fn grade(&self, qid: &str, doc: &str) -> Option<u32> {
        self.judgments.get(qid).and_then(|docs| docs.get(doc)).copied()
    }

    pub fn is_relevant(&self, qid: &str, doc: &str) -> bool {
        self.grade(qid, doc).is_some_and(|g| g >= 1)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads TREC qrels: `qid 0 docname grade`.
pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, doc, grade] = fields[..] else {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        };
        let grade: u32 = grade.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("grade `{grade}` is not a non-negative integer"),
        })?;
        if let Some(previous) = qrels.insert(qid, doc, grade) {
            warn!("line {}: ({qid}, {doc}) judged again, {previous} -> {grade}", i + 1);
        }
    }
    Ok(qrels)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CollectionStats {
    pub vocab_size: usize,
    pub docs: usize,
    pub mean_total_terms_doc: f64,
    pub mean_unique_terms_doc: f64,
    pub mean_total_terms_query: f64,
    pub mean_unique_terms_query: f64,
}

fn mean_total_and_unique(vectors: &[SparseVector]) -> (f64, f64) {
    if vectors.is_empty() {
        return (0.0, 0.0);
    }
    let n = vectors.len() as f64;
    let total: u64 = vectors.iter().map(SparseVector::total_impact).sum();
    let unique: usize = vectors.iter().map(SparseVector::len).sum();
    (total as f64 / n, unique as f64 / n)
}

/// Term statistics of a quantized corpus and query set.
pub fn collection_stats(corpus: &[SparseVector], queries: &[SparseVector]) -> CollectionStats {
    let vocab: HashSet<TermId> = corpus
        .iter()
        .flat_map(|d| d.entries().iter().map(|(t, _)| *t))
        .collect();
    let (doc_total, doc_unique) = mean_total_and_unique(corpus);
    let (query_total, query_unique) = mean_total_and_unique(queries);
    CollectionStats {
        vocab_size: vocab.len(),
        docs: corpus.len(),
        mean_total_terms_doc: doc_total,
        mean_unique_terms_doc: doc_unique,
        mean_total_terms_query: query_total,
        mean_unique_terms_query: query_unique,
    }
}
