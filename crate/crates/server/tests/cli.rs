#[macro_use]
#[path = "../../core/tests/support/mod.rs"]
mod support;
mod common;

use common::cli;

#[test]
fn stats_on_empty_store_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let s = common::stats(dir.path()).unwrap();
    for key in ["documents", "clusters", "nodes", "edges"] {
        assert_eq!(s[key], 0, "{key}");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cli(&["stats"]).status.code(), Some(2));
}

#[test]
fn stage_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().to_str().unwrap();
    assert_eq!(cli(&["cluster", "--store", store]).status.code(), Some(1));
    assert_eq!(cli(&["ingest", "--out", store]).status.code(), Some(1));
    let missing = dir.path().join("missing.jsonl");
    assert_eq!(cli(&["ingest", "--corpus", missing.to_str().unwrap(), "--out", store]).status.code(), Some(1));
}

#[test]
fn full_pipeline_then_query() {
    let dir = tempfile::tempdir().unwrap();
    common::cli_pipeline(dir.path()).unwrap();
    let s = common::stats(dir.path()).unwrap();
    assert!(s["nodes"].as_u64().unwrap() > 0 && s["edges"].as_u64().unwrap() > 0, "{s}");

    let out = cli(&["query", "wuhan", "--store", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!v["node_ids"].as_array().unwrap().is_empty());
    assert!(!v["doc_ids"].as_array().unwrap().is_empty());
}
