use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impact-bench"))
        .args(args)
        .current_dir(cwd)
        .env("IMPACT_BENCH_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = bin(args, cwd);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Generated corpus, queries and judgments plus a two-layout index in `idx/`.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(
        &["gen", "--docs", "600", "--vocab", "300", "--out", "c.jsonl", "--queries", "q.tsv", "--qrels", "qrels.txt", "--n-queries", "20", "--max-query-terms", "6"],
        p,
    );
    ok(&["build", "--corpus", "c.jsonl", "--layout", "both", "--out", "idx"], p);
    dir
}

#[test]
fn build_writes_both_layouts() {
    let dir = workspace();
    assert!(dir.path().join("idx/daat.ibx").is_file());
    assert!(dir.path().join("idx/saat.ibx").is_file());
}

#[test]
fn exact_engines_write_identical_runs() {
    let dir = workspace();
    let p = dir.path();
    ok(&["search", "--index", "idx", "--queries", "q.tsv", "--engine", "saat", "--rho", "inf", "--run", "saat.run"], p);
    ok(&["search", "--index", "idx", "--queries", "q.tsv", "--engine", "maxscore", "--run", "ms.run", "--counters", "ms.csv"], p);
    let saat = fs::read(p.join("saat.run")).unwrap();
    assert!(!saat.is_empty());
    assert_eq!(saat, fs::read(p.join("ms.run")).unwrap());
    let counters = fs::read_to_string(p.join("ms.csv")).unwrap();
    assert!(counters.starts_with("qid,engine,rho,docs_scored,postings_visited,blocks_skipped,consumed,elapsed_ns\n"));
    assert_eq!(counters.lines().count(), 21);

    let eval = ok(&["eval", "--run", "ms.run", "--qrels", "qrels.txt"], p);
    assert!(eval.starts_with("mean_rr10\t"), "{eval}");
}

#[test]
fn saat_without_impact_index_is_a_config_error() {
    let dir = workspace();
    let p = dir.path();
    ok(&["build", "--corpus", "c.jsonl", "--layout", "daat", "--out", "daat-only"], p);
    assert!(!p.join("daat-only/saat.ibx").exists());
    let out = bin(&["search", "--index", "daat-only", "--queries", "q.tsv", "--engine", "saat"], p);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
}

#[test]
fn bad_invocations_fail() {
    let dir = workspace();
    let p = dir.path();
    assert!(!bin(&["search", "--bogus"], p).status.success());
    assert!(!bin(&["build", "--corpus", "missing.jsonl", "--out", "x"], p).status.success());
    assert!(!bin(&["search", "--index", "idx", "--queries", "q.tsv", "--engine", "nope"], p).status.success());
    assert!(!bin(&["search", "--index", "idx", "--queries", "q.tsv", "--engine", "saat", "--acc-width", "8"], p).status.success());
    assert!(!bin(&["search", "--index", "idx", "--queries", "q.tsv", "--engine", "saat", "--rho", "lots"], p).status.success());
}

#[test]
fn generation_and_build_are_idempotent() {
    let dir = workspace();
    let p = dir.path();
    ok(&["gen", "--docs", "600", "--vocab", "300", "--out", "c2.jsonl", "--queries", "q2.tsv", "--n-queries", "20", "--max-query-terms", "6"], p);
    assert_eq!(fs::read(p.join("c.jsonl")).unwrap(), fs::read(p.join("c2.jsonl")).unwrap());
    assert_eq!(fs::read(p.join("q.tsv")).unwrap(), fs::read(p.join("q2.tsv")).unwrap());
    ok(&["build", "--corpus", "c2.jsonl", "--out", "idx2"], p);
    for f in ["daat.ibx", "saat.ibx"] {
        assert_eq!(fs::read(p.join("idx").join(f)).unwrap(), fs::read(p.join("idx2").join(f)).unwrap());
    }
}

#[test]
fn sweep_writes_csvs_and_runs() {
    let dir = workspace();
    let p = dir.path();
    let summary = ok(
        &["sweep", "--index", "idx", "--queries", "q.tsv", "--qrels", "qrels.txt", "--rho", "100,inf", "--engines", "or,maxscore,saat", "--k", "10", "--repeats", "1", "--out", "sw"],
        p,
    );
    assert!(summary.contains("maxscore"));
    let tradeoff = fs::read_to_string(p.join("sw/tradeoff.csv")).unwrap();
    let mut lines = tradeoff.lines();
    assert_eq!(lines.next(), Some("engine,rho,k,mean_rr10,mean_ms,median_ms,p95_ms,p99_ms,mean_postings,on_frontier"));
    assert_eq!(lines.count(), 4);
    let counters = fs::read_to_string(p.join("sw/counters.csv")).unwrap();
    assert_eq!(counters.lines().count(), 1 + 4 * 20);
    assert_eq!(fs::read(p.join("sw/runs/saat-inf.run")).unwrap(), fs::read(p.join("sw/runs/or-exact.run")).unwrap());
}

#[test]
fn bm25_build_and_stats() {
    let dir = workspace();
    let p = dir.path();
    fs::write(p.join("counts.jsonl"), "{\"id\":\"a\",\"vector\":{\"x\":3,\"y\":1}}\n{\"id\":\"b\",\"vector\":{\"x\":1}}\n").unwrap();
    ok(&["build", "--corpus", "counts.jsonl", "--bm25", "--k1", "1.2", "--b", "0.75", "--out", "bm"], p);
    let stats = ok(&["stats", "--index", "bm"], p);
    assert!(stats.contains("documents               2"), "{stats}");
    assert!(!bin(&["build", "--corpus", "counts.jsonl", "--bm25", "--b", "1.5", "--out", "bad"], p).status.success());

    let stats = ok(&["stats", "--index", "idx", "--queries", "q.tsv"], p);
    assert!(stats.contains("impact histogram"));
}
