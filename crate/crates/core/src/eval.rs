//! Reciprocal rank at cutoff 10 and TREC run files.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corpus::{DocId, DocTable, Qrels};
use crate::error::{Error, Result};

pub const RR_CUTOFF: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunEntry {
    pub qid: String,
    pub doc: String,
    pub rank: usize,
    pub score: u64,
    pub tag: String,
}

/// Ranked document names for one query.
pub type Ranking = Vec<(String, u64)>;

/// Names the documents of a top-k list.
pub fn name_ranking(top: &[(DocId, u64)], docs: &DocTable) -> Ranking {
    top.iter().map(|&(d, s)| (docs.name(d).to_string(), s)).collect()
}

/// `1 / rank` of the first relevant document within the top 10, else 0.
pub fn rr_at_10<S: AsRef<str>>(ranking: &[S], qid: &str, qrels: &Qrels) -> f64 {
    ranking
        .iter()
        .take(RR_CUTOFF)
        .position(|doc| qrels.is_relevant(qid, doc.as_ref()))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Mean RR@10 over `queries`; queries missing from the run score 0.
pub fn mean_rr_at_10<S: AsRef<str>>(
    rankings: &HashMap<String, Vec<String>>,
    qrels: &Qrels,
    queries: &[S],
) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::InvalidArgument("mean RR@10 over an empty query set".into()));
    }
    let total: f64 = queries
        .iter()
        .map(|q| {
            let q = q.as_ref();
            rankings.get(q).map_or(0.0, |r| rr_at_10(r, q, qrels))
        })
        .sum();
    Ok(total / queries.len() as f64)
}

/// Groups run entries into per-query document lists in rank order.
pub fn rankings_by_query(entries: &[RunEntry]) -> HashMap<String, Vec<String>> {
    let mut by_query: HashMap<String, Vec<&RunEntry>> = HashMap::new();
    for e in entries {
        by_query.entry(e.qid.clone()).or_default().push(e);
    }
    by_query
        .into_iter()
        .map(|(q, mut es)| {
            es.sort_by_key(|e| e.rank);
            (q, es.into_iter().map(|e| e.doc.clone()).collect())
        })
        .collect()
}

/// Writes `qid Q0 docname rank score tag` lines.
pub fn write_run<W: Write>(mut out: W, rankings: &[(String, Ranking)], tag: &str) -> Result<()> {
    for (qid, ranking) in rankings {
        for (i, (doc, score)) in ranking.iter().enumerate() {
            writeln!(out, "{qid} Q0 {doc} {} {score} {tag}", i + 1)?;
        }
    }
    Ok(())
}

/// Reads a run file, checking per-query rank contiguity and score order.
pub fn read_run<R: BufRead>(reader: R) -> Result<Vec<RunEntry>> {
    let mut last: HashMap<String, (usize, u64)> = HashMap::new();
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let err = |message: String| Error::Parse { line: lineno, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, doc, rank, score, tag] = fields[..] else {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        };
        let rank: usize = rank.parse().map_err(|_| err(format!("bad rank `{rank}`")))?;
        let score: u64 = score.parse().map_err(|_| err(format!("bad score `{score}`")))?;
        match last.get(qid) {
            None if rank != 1 => return Err(err(format!("query {qid} starts at rank {rank}"))),
            Some(&(prev_rank, _)) if rank != prev_rank + 1 => {
                return Err(err(format!("query {qid}: rank {rank} follows {prev_rank}")))
            }
            Some(&(_, prev_score)) if score > prev_score => {
                return Err(err(format!("query {qid}: score {score} rises above {prev_score}")))
            }
            _ => {}
        }
        last.insert(qid.to_string(), (rank, score));
        entries.push(RunEntry {
            qid: qid.to_string(),
            doc: doc.to_string(),
            rank,
            score,
            tag: tag.to_string(),
        });
    }
    Ok(entries)
}
