//! `impact-bench`: build, search, sweep and inspect impact indexes.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use impact_core::bench::{
    expand_configs, parse_rho, sweep_summary, tradeoff_sweep, wackiness_report, write_counters_csv,
    write_tradeoff_csv, CounterRow, EngineConfig, Engines, SweepSettings,
};
use impact_core::corpus::{parse_corpus, parse_qrels, parse_queries, Lexicon, Qrels};
use impact_core::eval::{mean_rr_at_10, name_ranking, rankings_by_query, read_run, write_run, Ranking};
use impact_core::index::format::{encode_index, read_any_index, AnyIndex, IndexLayout};
use impact_core::index::{build_document_ordered, build_impact_ordered};
use impact_core::saat::AccumulatorWidth;
use impact_core::synth::{
    generate_corpus, generate_queries, write_corpus_jsonl, write_qrels, write_queries, ImpactDistribution,
    QueryConfig, SyntheticConfig,
};
use impact_core::weighting::{prepare_corpus, quantize_vectors};
use impact_core::{Bm25Params64, DocumentOrderedIndex, ImpactOrderedIndex, SparseVector};

const DAAT_FILE: &str = "daat.ibx";
const SAAT_FILE: &str = "saat.ibx";
const THREADS_ENV: &str = "IMPACT_BENCH_THREADS";

#[derive(Parser, Debug)]
#[command(name = "impact-bench", version, about = "Dual-traversal sparse retrieval benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus, queries and judgments.
    Gen(GenArgs),
    /// Quantize a JSONL corpus and write index files.
    Build(BuildArgs),
    /// Evaluate queries with one engine and write a run file.
    Search(SearchArgs),
    /// Time every engine configuration and compute the tradeoff frontier.
    Sweep(SweepArgs),
    /// Collection and impact-distribution statistics.
    Stats(StatsArgs),
    /// Mean RR@10 of a run file.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 10_000)]
    docs: usize,
    #[arg(long, default_value_t = 2_000)]
    vocab: usize,
    #[arg(long, default_value_t = 30)]
    mean_len: usize,
    /// Zipf exponent of term popularity.
    #[arg(long, default_value_t = 1.0)]
    term_skew: f64,
    /// `uniform[:impact]` or `zipf[:exponent[:max]]`.
    #[arg(long, default_value = "zipf:1.2:255")]
    impacts: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Corpus output (JSONL).
    #[arg(long)]
    out: PathBuf,
    /// Query output (TSV).
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Judgment output, one relevant document per query.
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    n_queries: usize,
    #[arg(long, default_value_t = 30)]
    max_query_terms: usize,
    #[arg(long, default_value_t = 8)]
    max_query_weight: u32,
    #[arg(long, default_value_t = 7)]
    query_seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Daat,
    Saat,
    Both,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = Layout::Both)]
    layout: Layout,
    /// Output directory; receives daat.ibx and/or saat.ibx.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    bits: u8,
    /// Treat vector values as term counts and weight them with BM25.
    #[arg(long)]
    bm25: bool,
    #[arg(long, default_value_t = 0.82)]
    k1: f64,
    #[arg(long, default_value_t = 0.68)]
    b: f64,
}

#[derive(Args, Debug)]
struct QueryInput {
    /// Directory written by `build`.
    #[arg(long)]
    index: PathBuf,
    /// Queries as JSONL records or `qid<TAB>term:weight ...` lines.
    #[arg(long)]
    queries: PathBuf,
    /// Quantization bits for query weights.
    #[arg(long, default_value_t = 8)]
    query_bits: u8,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[command(flatten)]
    input: QueryInput,
    /// or | wand | bmw | maxscore | saat
    #[arg(long)]
    engine: String,
    #[arg(long, default_value_t = impact_core::DEFAULT_K)]
    k: usize,
    /// Postings budget (`inf` for none); saat only.
    #[arg(long, default_value_t = impact_core::DEFAULT_RHO.to_string())]
    rho: String,
    #[arg(long, default_value = "32")]
    acc_width: String,
    /// Run file; stdout when absent.
    #[arg(long)]
    run: Option<PathBuf>,
    /// Per-query counters CSV.
    #[arg(long)]
    counters: Option<PathBuf>,
    #[arg(long, default_value = "impact-bench")]
    tag: String,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    input: QueryInput,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long, default_value = "1000,5000,20000,inf", value_delimiter = ',')]
    rho: Vec<String>,
    #[arg(long, default_value = "or,wand,bmw,maxscore,saat", value_delimiter = ',')]
    engines: Vec<String>,
    #[arg(long, default_value_t = impact_core::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value = "32")]
    acc_width: String,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Receives tradeoff.csv, counters.csv and runs/.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    query_bits: u8,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Query file defining the evaluated set; defaults to the judged queries.
    #[arg(long)]
    queries: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads().and_then(|()| run(cli)) {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value.parse().with_context(|| format!("{THREADS_ENV}=`{value}` is not a count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen(args) => gen(args),
        Command::Build(args) => build(args),
        Command::Search(args) => search(args),
        Command::Sweep(args) => sweep(args),
        Command::Stats(args) => stats(args),
        Command::Eval(args) => eval(args),
    }
}

/// Writes through a temporary file in the destination directory, then renames.
fn write_atomic<F>(path: &Path, write: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut BufWriter<&mut tempfile::NamedTempFile>) -> anyhow::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(&mut tmp);
        write(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn gen(args: GenArgs) -> anyhow::Result<()> {
    let impacts: ImpactDistribution = args.impacts.parse()?;
    let cfg = SyntheticConfig {
        n_docs: args.docs,
        vocab: args.vocab,
        mean_doc_len: args.mean_len,
        term_skew: args.term_skew,
        impacts,
        seed: args.seed,
    };
    let docs = generate_corpus(&cfg)?;
    write_atomic(&args.out, |w| Ok(write_corpus_jsonl(w, &docs)?))?;
    info!("wrote {} documents to {}", docs.len(), args.out.display());

    if args.queries.is_some() || args.qrels.is_some() {
        let qcfg = QueryConfig {
            n_queries: args.n_queries,
            max_terms: args.max_query_terms,
            max_weight: args.max_query_weight,
            seed: args.query_seed,
            ..QueryConfig::default()
        };
        let generated = generate_queries(&docs, args.vocab, &qcfg)?;
        if let Some(path) = &args.queries {
            write_atomic(path, |w| Ok(write_queries(w, &generated.queries)?))?;
        }
        if let Some(path) = &args.qrels {
            write_atomic(path, |w| Ok(write_qrels(w, &generated.relevant)?))?;
        }
    }
    Ok(())
}

fn write_layout<I: IndexLayout>(index: &I, path: &Path) -> anyhow::Result<u64> {
    let bytes = encode_index(index)?;
    write_atomic(path, |w| Ok(w.write_all(&bytes)?))?;
    Ok(bytes.len() as u64)
}

fn build(args: BuildArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let (table, raw) = parse_corpus(open(&args.corpus)?).context("parsing the corpus")?;
    let bm25 = if args.bm25 { Some(Bm25Params64::new(args.k1, args.b)?) } else { None };
    let (corpus, quantizer) = prepare_corpus(table, &raw, args.bits, bm25.as_ref())?;
    info!("quantizer: {} bits over max weight {}", quantizer.bits(), quantizer.global_max());
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    if matches!(args.layout, Layout::Daat | Layout::Both) {
        let index = build_document_ordered(&corpus)?;
        let bytes = write_layout(&index, &args.out.join(DAAT_FILE))?;
        println!("{DAAT_FILE}: {} docs, {} terms, {} postings, {bytes} bytes", index.n_docs(), index.lexicon().len(), index.total_postings());
    }
    if matches!(args.layout, Layout::Saat | Layout::Both) {
        let index = build_impact_ordered(&corpus)?;
        let bytes = write_layout(&index, &args.out.join(SAAT_FILE))?;
        println!("{SAAT_FILE}: {} docs, {} terms, {} postings, {bytes} bytes", index.n_docs(), index.lexicon().len(), index.total_postings());
    }
    info!("build took {:.2?}", started.elapsed());
    Ok(())
}

struct Loaded {
    daat: Option<DocumentOrderedIndex>,
    saat: Option<ImpactOrderedIndex>,
}

impl Loaded {
    fn from_dir(dir: &Path) -> anyhow::Result<Self> {
        let mut loaded = Self { daat: None, saat: None };
        for name in [DAAT_FILE, SAAT_FILE] {
            let path = dir.join(name);
            if !path.exists() {
                continue;
            }
            match read_any_index(&path).with_context(|| format!("reading {}", path.display()))? {
                AnyIndex::DocumentOrdered(i) => loaded.daat = Some(i),
                AnyIndex::ImpactOrdered(i) => loaded.saat = Some(i),
            }
        }
        if loaded.daat.is_none() && loaded.saat.is_none() {
            bail!("no {DAAT_FILE} or {SAAT_FILE} in {}", dir.display());
        }
        Ok(loaded)
    }

    fn lexicon(&self) -> &Lexicon {
        match (&self.daat, &self.saat) {
            (Some(d), _) => d.lexicon(),
            (None, Some(s)) => s.lexicon(),
            (None, None) => unreachable!("checked on load"),
        }
    }

    fn engines(&self) -> Engines<'_> {
        Engines::new(self.daat.as_ref(), self.saat.as_ref())
    }
}

/// Parses, quantizes and maps queries onto the index vocabulary.
fn load_queries(path: &Path, lexicon: &Lexicon, bits: u8) -> anyhow::Result<Vec<(String, SparseVector)>> {
    let raw = parse_queries(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let vectors: Vec<_> = raw.iter().map(|(_, v)| v.clone()).collect();
    let (quantized, _) = quantize_vectors(&vectors, bits)?;
    Ok(raw.into_iter().zip(quantized).map(|((qid, _), terms)| (qid, lexicon.vectorize(&terms))).collect())
}

fn engine_config(engine: &str, rho: &str, width: &str) -> anyhow::Result<EngineConfig> {
    let width: AccumulatorWidth = width.parse()?;
    let rhos = [parse_rho(rho)?];
    Ok(expand_configs(&[engine.to_string()], &rhos, width)?.remove(0))
}

fn search(args: SearchArgs) -> anyhow::Result<()> {
    let config = engine_config(&args.engine, &args.rho, &args.acc_width)?;
    let loaded = Loaded::from_dir(&args.input.index)?;
    let mut engines = loaded.engines();
    if !engines.supports(&config) {
        bail!(
            "configuration error: engine `{}` needs {} in {}",
            config.engine_name(),
            if matches!(config, EngineConfig::Saat { .. }) { SAAT_FILE } else { DAAT_FILE },
            args.input.index.display()
        );
    }
    let queries = load_queries(&args.input.queries, loaded.lexicon(), args.input.query_bits)?;
    let doc_table = engines.doc_table().expect("an index is loaded");

    let mut rankings: Vec<(String, Ranking)> = Vec::with_capacity(queries.len());
    let mut counters = Vec::with_capacity(queries.len());
    for (qid, query) in &queries {
        let start = Instant::now();
        let outcome = engines.search(&config, query, args.k).with_context(|| format!("query {qid}"))?;
        let elapsed_ns = start.elapsed().as_nanos() as u64;
        rankings.push((qid.clone(), name_ranking(&outcome.top, doc_table)));
        counters.push(CounterRow { qid: qid.clone(), config, counters: outcome.counters, elapsed_ns });
    }

    match &args.run {
        Some(path) => write_atomic(path, |w| Ok(write_run(w, &rankings, &args.tag)?))?,
        None => write_run(io::stdout().lock(), &rankings, &args.tag)?,
    }
    if let Some(path) = &args.counters {
        write_atomic(path, |w| Ok(write_counters_csv(w, &counters)?))?;
    }
    info!("{} queries with {config}", queries.len());
    Ok(())
}

fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let width: AccumulatorWidth = args.acc_width.parse()?;
    let rhos = args.rho.iter().map(|r| parse_rho(r)).collect::<Result<Vec<_>, _>>()?;
    let configs = expand_configs(&args.engines, &rhos, width)?;
    let loaded = Loaded::from_dir(&args.input.index)?;
    let mut engines = loaded.engines();
    if let Some(c) = configs.iter().find(|c| !engines.supports(c)) {
        bail!("configuration error: engine `{}` has no matching index in {}", c.engine_name(), args.input.index.display());
    }
    let queries = load_queries(&args.input.queries, loaded.lexicon(), args.input.query_bits)?;
    let qrels = parse_qrels(open(&args.qrels)?)?;
    let settings = SweepSettings {
        k: args.k,
        warmup: args.warmup,
        repeats: args.repeats,
        index_id: args.input.index.display().to_string(),
    };
    let report = tradeoff_sweep(&mut engines, &queries, &qrels, &configs, &settings)?;

    let runs_dir = args.out.join("runs");
    fs::create_dir_all(&runs_dir).with_context(|| format!("creating {}", runs_dir.display()))?;
    write_atomic(&args.out.join("tradeoff.csv"), |w| Ok(write_tradeoff_csv(w, &report.rows)?))?;
    write_atomic(&args.out.join("counters.csv"), |w| Ok(write_counters_csv(w, &report.counters)?))?;
    let doc_table = engines.doc_table().expect("an index is loaded");
    for (config, per_query) in configs.iter().zip(&report.rankings) {
        let named: Vec<(String, Ranking)> =
            per_query.iter().map(|(qid, top)| (qid.clone(), name_ranking(top, doc_table))).collect();
        let file = format!("{}-{}.run", config.engine_name(), config.rho_label().replace('-', "exact"));
        write_atomic(&runs_dir.join(file), |w| Ok(write_run(w, &named, "impact-bench")?))?;
    }
    print!("{}", sweep_summary(&report.rows));
    Ok(())
}

fn stats(args: StatsArgs) -> anyhow::Result<()> {
    let loaded = Loaded::from_dir(&args.index)?;
    let index = match loaded.daat {
        Some(i) => i,
        None => bail!("stats needs {DAAT_FILE} in {}", args.index.display()),
    };
    let queries: Vec<SparseVector> = match &args.queries {
        Some(path) => load_queries(path, index.lexicon(), args.query_bits)?.into_iter().map(|(_, q)| q).collect(),
        None => Vec::new(),
    };
    let report = wackiness_report(&index.document_vectors(), &queries, &index);
    print!("{report}");
    Ok(())
}

fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let entries = read_run(open(&args.run)?).with_context(|| format!("reading {}", args.run.display()))?;
    let qrels: Qrels = parse_qrels(open(&args.qrels)?)?;
    let qids: Vec<String> = match &args.queries {
        Some(path) => parse_queries(open(path)?)?.into_iter().map(|(q, _)| q).collect(),
        None => {
            let mut ids: Vec<String> = qrels.query_ids().map(str::to_string).collect();
            ids.sort();
            ids
        }
    };
    let mean = mean_rr_at_10(&rankings_by_query(&entries), &qrels, &qids)?;
    println!("mean_rr10\t{mean:.6}\tqueries\t{}", qids.len());
    Ok(())
}
