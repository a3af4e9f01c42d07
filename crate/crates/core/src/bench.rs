//! Timing, latency summaries, Pareto frontiers and the configuration sweep.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::time::Instant;

use crate::corpus::{collection_stats, CollectionStats, DocId, DocTable, Qrels, SparseVector};
use crate::daat::DaatAlgorithm;
use crate::error::{Error, Result};
use crate::eval::{mean_rr_at_10, name_ranking};
use crate::index::{DocumentOrderedIndex, ImpactOrderedIndex};
use crate::saat::{AccumulatorWidth, SaatSearcher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineConfig {
    Daat(DaatAlgorithm),
    Saat { rho: Option<u64>, width: AccumulatorWidth },
}

impl EngineConfig {
    pub fn engine_name(&self) -> &'static str {
        match self {
            Self::Daat(a) => a.name(),
            Self::Saat { .. } => "saat",
        }
    }

    /// `-` for DaaT engines, `inf` for an unbounded budget.
    pub fn rho_label(&self) -> String {
        match self {
            Self::Daat(_) => "-".to_string(),
            Self::Saat { rho: None, .. } => "inf".to_string(),
            Self::Saat { rho: Some(r), .. } => r.to_string(),
        }
    }

    /// Whether the configuration is rank-safe.
    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Daat(_) | Self::Saat { rho: None, .. })
    }
}

impl fmt::Display for EngineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Daat(a) => write!(f, "{a}"),
            Self::Saat { .. } => write!(f, "saat(rho={})", self.rho_label()),
        }
    }
}

/// Parses a budget: a non-negative integer or `inf`.
pub fn parse_rho(s: &str) -> Result<Option<u64>> {
    match s.trim() {
        "inf" | "∞" => Ok(None),
        n => n
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("rho must be an integer or `inf`, got `{s}`"))),
    }
}

/// One configuration per DaaT engine, and one per budget for `saat`.
pub fn expand_configs(
    engines: &[String],
    rhos: &[Option<u64>],
    width: AccumulatorWidth,
) -> Result<Vec<EngineConfig>> {
    let mut configs = Vec::new();
    for engine in engines {
        if engine == "saat" {
            configs.extend(rhos.iter().map(|&rho| EngineConfig::Saat { rho, width }));
        } else {
            configs.push(EngineConfig::Daat(engine.parse()?));
        }
    }
    Ok(configs)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCounters {
    pub docs_scored: u64,
    pub postings_visited: u64,
    pub blocks_skipped: u64,
    pub consumed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub top: Vec<(DocId, u64)>,
    pub counters: QueryCounters,
}

/// Evaluates any engine configuration against whichever layouts are loaded.
#[derive(Debug)]
pub struct Engines<'a> {
    daat: Option<&'a DocumentOrderedIndex>,
    saat: Option<SaatSearcher<'a>>,
}

impl<'a> Engines<'a> {
    pub fn new(daat: Option<&'a DocumentOrderedIndex>, saat: Option<&'a ImpactOrderedIndex>) -> Self {
        Self { daat, saat: saat.map(SaatSearcher::new) }
    }

    pub fn supports(&self, config: &EngineConfig) -> bool {
        match config {
            EngineConfig::Daat(_) => self.daat.is_some(),
            EngineConfig::Saat { .. } => self.saat.is_some(),
        }
    }

    pub fn doc_table(&self) -> Option<&'a DocTable> {
        self.daat
            .map(DocumentOrderedIndex::doc_table)
            .or_else(|| self.saat.as_ref().map(|s| s.index().doc_table()))
    }

    pub fn search(&mut self, config: &EngineConfig, query: &SparseVector, k: usize) -> Result<SearchOutcome> {
        match *config {
            EngineConfig::Daat(algo) => {
                let index = self.daat.ok_or_else(|| {
                    Error::InvalidArgument(format!("engine `{algo}` needs a document-ordered index"))
                })?;
                let (top, c) = algo.search(query, index, k)?;
                Ok(SearchOutcome {
                    top: top.into_sorted_vec(),
                    counters: QueryCounters {
                        docs_scored: c.docs_scored,
                        postings_visited: c.postings_visited,
                        blocks_skipped: c.blocks_skipped,
                        consumed: 0,
                    },
                })
            }
            EngineConfig::Saat { rho, width } => {
                let searcher = self.saat.as_mut().ok_or_else(|| {
                    Error::InvalidArgument("engine `saat` needs an impact-ordered index".into())
                })?;
                let out = searcher.search(query, k, rho, width)?;
                Ok(SearchOutcome {
                    top: out.top.into_sorted_vec(),
                    counters: QueryCounters { consumed: out.consumed, ..Default::default() },
                })
            }
        }
    }
}

/// Monotonic nanosecond source.
pub trait Clock {
    fn now_ns(&mut self) -> u64;
}

#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now_ns(&mut self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedQuery {
    pub qid: String,
    /// Minimum over the timed repeats.
    pub latency_ns: u64,
    pub mean_ns: f64,
    /// Outcome of the final repeat.
    pub outcome: SearchOutcome,
}

/// Runs each query `warmup` times untimed, then `repeats` times timed.
pub fn time_queries<C, F>(
    queries: &[(String, SparseVector)],
    warmup: usize,
    repeats: usize,
    clock: &mut C,
    mut eval: F,
) -> Result<Vec<TimedQuery>>
where
    C: Clock,
    F: FnMut(&SparseVector) -> Result<SearchOutcome>,
{
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let mut timed = Vec::with_capacity(queries.len());
    for (qid, query) in queries {
        let wrap = |e: Error| Error::Query { qid: qid.clone(), source: Box::new(e) };
        for _ in 0..warmup {
            eval(query).map_err(wrap)?;
        }
        let mut samples = Vec::with_capacity(repeats);
        let mut last = None;
        for _ in 0..repeats {
            let start = clock.now_ns();
            let outcome = eval(query).map_err(wrap)?;
            samples.push(clock.now_ns().saturating_sub(start));
            last = Some(outcome);
        }
        timed.push(TimedQuery {
            qid: qid.clone(),
            latency_ns: *samples.iter().min().expect("repeats >= 1"),
            mean_ns: samples.iter().sum::<u64>() as f64 / samples.len() as f64,
            outcome: last.expect("repeats >= 1"),
        });
    }
    Ok(timed)
}

/// Latency summary in nanoseconds; percentiles by nearest rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub mean: f64,
    pub median: u64,
    pub p95: u64,
    pub p99: u64,
    pub min: u64,
    pub max: u64,
    pub n: usize,
}

/// Nearest-rank percentile of sorted samples, `percent` in 1..=100.
pub fn nearest_rank(sorted: &[u64], percent: u64) -> u64 {
    let n = sorted.len() as u64;
    let rank = (percent * n).div_ceil(100).max(1);
    sorted[(rank - 1) as usize]
}

pub fn latency_stats(samples: &[u64]) -> Result<LatencyStats> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("latency statistics of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let sum: u128 = sorted.iter().map(|&s| u128::from(s)).sum();
    Ok(LatencyStats {
        mean: sum as f64 / sorted.len() as f64,
        median: nearest_rank(&sorted, 50),
        p95: nearest_rank(&sorted, 95),
        p99: nearest_rank(&sorted, 99),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        n: sorted.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub engine: String,
    pub rho: String,
    pub k: usize,
    pub index_id: String,
    /// Mean RR@10.
    pub effectiveness: f64,
    pub latency: LatencyStats,
}

/// Marks points not dominated on (lower latency, higher effectiveness).
///
/// Points tied on both axes share the same fate.
pub fn frontier_mask(points: &[(f64, f64)]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a].0.total_cmp(&points[b].0).then(points[b].1.total_cmp(&points[a].1))
    });
    let mut mask = vec![false; points.len()];
    let mut best_faster = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let latency = points[order[i]].0;
        let mut j = i;
        while j < order.len() && points[order[j]].0 == latency {
            j += 1;
        }
        // group [i, j) shares a latency; its first element has the best effectiveness
        let group_best = points[order[i]].1;
        if group_best > best_faster {
            for &p in &order[i..j] {
                mask[p] = points[p].1 == group_best;
            }
            best_faster = group_best;
        }
        i = j;
    }
    mask
}

/// Pareto-optimal subset on (mean latency, mean RR@10), in input order.
pub fn pareto_frontier(points: &[TradeoffPoint]) -> Vec<TradeoffPoint> {
    let axes: Vec<(f64, f64)> = points.iter().map(|p| (p.latency.mean, p.effectiveness)).collect();
    frontier_mask(&axes)
        .into_iter()
        .zip(points)
        .filter_map(|(keep, p)| keep.then(|| p.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub config: EngineConfig,
    pub point: TradeoffPoint,
    /// Mean postings visited (DaaT) or consumed (SaaT) per query.
    pub mean_postings: f64,
    pub on_frontier: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterRow {
    pub qid: String,
    pub config: EngineConfig,
    pub counters: QueryCounters,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub k: usize,
    pub warmup: usize,
    pub repeats: usize,
    pub index_id: String,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { k: crate::DEFAULT_K, warmup: 1, repeats: 3, index_id: "index".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub counters: Vec<CounterRow>,
    /// Per-configuration rankings, in configuration order.
    pub rankings: Vec<Vec<(String, Vec<(DocId, u64)>)>>,
}

/// Times every configuration over the query set and scores it against `qrels`.
pub fn tradeoff_sweep(
    engines: &mut Engines<'_>,
    queries: &[(String, SparseVector)],
    qrels: &Qrels,
    configs: &[EngineConfig],
    settings: &SweepSettings,
) -> Result<SweepReport> {
    let doc_table = engines
        .doc_table()
        .ok_or_else(|| Error::InvalidArgument("sweep needs at least one index".into()))?;
    let qids: Vec<&str> = queries.iter().map(|(q, _)| q.as_str()).collect();
    let mut report = SweepReport::default();
    let mut clock = SystemClock::default();

    for config in configs {
        let timed = time_queries(queries, settings.warmup, settings.repeats, &mut clock, |q| {
            engines.search(config, q, settings.k)
        })?;
        let rankings: HashMap<String, Vec<String>> = timed
            .iter()
            .map(|t| {
                let names = name_ranking(&t.outcome.top, doc_table).into_iter().map(|(d, _)| d).collect();
                (t.qid.clone(), names)
            })
            .collect();
        let effectiveness = mean_rr_at_10(&rankings, qrels, &qids)?;
        let latencies: Vec<u64> = timed.iter().map(|t| t.latency_ns).collect();
        let postings: u64 = timed
            .iter()
            .map(|t| match config {
                EngineConfig::Daat(_) => t.outcome.counters.postings_visited,
                EngineConfig::Saat { .. } => t.outcome.counters.consumed,
            })
            .sum();
        report.rows.push(SweepRow {
            config: *config,
            point: TradeoffPoint {
                engine: config.engine_name().to_string(),
                rho: config.rho_label(),
                k: settings.k,
                index_id: settings.index_id.clone(),
                effectiveness,
                latency: latency_stats(&latencies)?,
            },
            mean_postings: postings as f64 / timed.len().max(1) as f64,
            on_frontier: false,
        });
        report.counters.extend(timed.iter().map(|t| CounterRow {
            qid: t.qid.clone(),
            config: *config,
            counters: t.outcome.counters,
            elapsed_ns: t.latency_ns,
        }));
        report.rankings.push(timed.into_iter().map(|t| (t.qid, t.outcome.top)).collect());
    }

    let axes: Vec<(f64, f64)> =
        report.rows.iter().map(|r| (r.point.latency.mean, r.point.effectiveness)).collect();
    for (row, keep) in report.rows.iter_mut().zip(frontier_mask(&axes)) {
        row.on_frontier = keep;
    }
    Ok(report)
}

fn ms(ns: f64) -> String {
    format!("{:.6}", ns / 1e6)
}

pub const TRADEOFF_HEADER: [&str; 10] = [
    "engine", "rho", "k", "mean_rr10", "mean_ms", "median_ms", "p95_ms", "p99_ms", "mean_postings", "on_frontier",
];

pub const COUNTERS_HEADER: [&str; 8] = [
    "qid", "engine", "rho", "docs_scored", "postings_visited", "blocks_skipped", "consumed", "elapsed_ns",
];

pub fn write_tradeoff_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRADEOFF_HEADER)?;
    for r in rows {
        let l = &r.point.latency;
        w.write_record([
            r.point.engine.clone(),
            r.point.rho.clone(),
            r.point.k.to_string(),
            format!("{:.6}", r.point.effectiveness),
            ms(l.mean),
            ms(l.median as f64),
            ms(l.p95 as f64),
            ms(l.p99 as f64),
            format!("{:.2}", r.mean_postings),
            r.on_frontier.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_counters_csv<W: Write>(out: W, rows: &[CounterRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COUNTERS_HEADER)?;
    for r in rows {
        let c = &r.counters;
        w.write_record([
            r.qid.clone(),
            r.config.engine_name().to_string(),
            r.config.rho_label(),
            c.docs_scored.to_string(),
            c.postings_visited.to_string(),
            c.blocks_skipped.to_string(),
            c.consumed.to_string(),
            r.elapsed_ns.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text table of a sweep.
pub fn sweep_summary(rows: &[SweepRow]) -> String {
    let mut s = format!(
        "{:<10} {:>10} {:>9} {:>10} {:>10} {:>10} {:>14} {}\n",
        "engine", "rho", "RR@10", "mean ms", "p99 ms", "max ms", "postings/query", "frontier"
    );
    for r in rows {
        let l = &r.point.latency;
        s.push_str(&format!(
            "{:<10} {:>10} {:>9.4} {:>10.3} {:>10.3} {:>10.3} {:>14.1} {}\n",
            r.point.engine,
            r.point.rho,
            r.point.effectiveness,
            l.mean / 1e6,
            l.p99 as f64 / 1e6,
            l.max as f64 / 1e6,
            r.mean_postings,
            if r.on_frontier { "*" } else { "" }
        ));
    }
    s
}

/// Term-weight distribution summary of an index.
#[derive(Debug, Clone, PartialEq)]
pub struct WackinessReport {
    pub stats: CollectionStats,
    /// Posting count per impact value.
    pub histogram: BTreeMap<u32, u64>,
    pub total_postings: u64,
    pub max_impact: u32,
    pub mean_impact: f64,
    /// Share of postings whose impact lies in the top tenth of `(0, max_impact]`.
    pub top_decile_posting_fraction: f64,
    /// Share of total impact mass held by the 10% highest-impact postings.
    pub top_decile_mass_fraction: f64,
}

pub fn wackiness_report(
    corpus: &[SparseVector],
    queries: &[SparseVector],
    index: &DocumentOrderedIndex,
) -> WackinessReport {
    let mut histogram: BTreeMap<u32, u64> = BTreeMap::new();
    for list in index.lists() {
        for &impact in list.impacts() {
            *histogram.entry(impact).or_default() += 1;
        }
    }
    let total_postings: u64 = histogram.values().sum();
    let mass: u64 = histogram.iter().map(|(&i, &n)| u64::from(i) * n).sum();
    let max_impact = histogram.keys().next_back().copied().unwrap_or(0);

    let top_range: u64 = histogram
        .iter()
        .filter(|(&i, _)| u64::from(i) * 10 > u64::from(max_impact) * 9)
        .map(|(_, &n)| n)
        .sum();

    let mut budget = total_postings.div_ceil(10);
    let mut top_mass = 0u64;
    for (&impact, &count) in histogram.iter().rev() {
        let take = count.min(budget);
        top_mass += take * u64::from(impact);
        budget -= take;
        if budget == 0 {
            break;
        }
    }

    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    WackinessReport {
        stats: collection_stats(corpus, queries),
        histogram,
        total_postings,
        max_impact,
        mean_impact: ratio(mass, total_postings),
        top_decile_posting_fraction: ratio(top_range, total_postings),
        top_decile_mass_fraction: ratio(top_mass, mass),
    }
}

impl fmt::Display for WackinessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.stats;
        writeln!(f, "vocabulary              {}", s.vocab_size)?;
        writeln!(f, "documents               {}", s.docs)?;
        writeln!(f, "doc terms total/unique  {:.2} / {:.2}", s.mean_total_terms_doc, s.mean_unique_terms_doc)?;
        writeln!(f, "query terms total/unique {:.2} / {:.2}", s.mean_total_terms_query, s.mean_unique_terms_query)?;
        writeln!(f, "postings                {}", self.total_postings)?;
        writeln!(f, "impact max/mean         {} / {:.3}", self.max_impact, self.mean_impact)?;
        writeln!(f, "top-decile postings     {:.4}", self.top_decile_posting_fraction)?;
        writeln!(f, "top-decile impact mass  {:.4}", self.top_decile_mass_fraction)?;
        writeln!(f, "impact histogram ({} distinct values):", self.histogram.len())?;
        for (impact, count) in &self.histogram {
            writeln!(f, "  {impact:>5} {count}")?;
        }
        Ok(())
    }
}
