//! HTTP and CLI helpers over a fixture store, shared by the API suite and
//! the acceptance gate.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use eventgraph::api::{router, AppState};
use eventgraph_core::config::PipelineConfig;
use eventgraph_core::store::{Snapshot, Store};
use eventgraph_core::text::tokenize;

use crate::support::{data_dir, Check};

pub fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eventgraph")).args(args).output().expect("spawn eventgraph")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Runs every pipeline subcommand of the binary against `store`.
pub fn cli_pipeline(store: &Path) -> Result<(), String> {
    let data = data_dir();
    let (news, social, feed, resources) = (
        data.join("corpus/news.jsonl"),
        data.join("corpus/social.jsonl"),
        data.join("feeds/sample.xml"),
        data.join("resources"),
    );
    let s = path(store);
    let steps: Vec<Vec<&str>> = vec![
        vec!["ingest", "--corpus", path(&news), path(&social), "--rss", path(&feed), "--out", s, "--now", "2020-01-25T00:00:00Z"],
        vec!["prepare", "--store", s, "--resources", path(&resources)],
        vec!["cluster", "--store", s],
        vec!["extract", "--store", s],
        vec!["graph-build", "--store", s],
        vec!["index", "--store", s],
    ];
    for args in steps {
        let out = cli(&args);
        if !out.status.success() {
            return Err(format!("`{}` exited with {}: {}", args[0], out.status, String::from_utf8_lossy(&out.stderr)));
        }
    }
    Ok(())
}

pub fn stats(store: &Path) -> Result<Value, String> {
    let out = cli(&["stats", "--store", path(store)]);
    if !out.status.success() {
        return Err(format!("stats exited with {}", out.status));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

pub fn check_determinism() -> Check {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cli_pipeline(a.path())?;
    cli_pipeline(b.path())?;
    for sub in ["graph", "index"] {
        let (fa, fb) = (files_under(&a.path().join(sub)), files_under(&b.path().join(sub)));
        ensure!(!fa.is_empty(), "{sub}/ is empty");
        ensure!(fa.keys().eq(fb.keys()), "{sub}/ file sets differ");
        for (name, bytes) in &fa {
            ensure!(&fb[name] == bytes, "{sub}/{} differs between runs", name.display());
        }
    }
    ensure!(files_under(a.path()) == files_under(b.path()), "store contents differ between runs");
    let s = stats(a.path())?;
    let count = |k: &str| s[k].as_u64().unwrap_or(0);
    ensure!(count("clusters") >= 3, "{} clusters", count("clusters"));
    ensure!(count("nodes") >= 10, "{} nodes", count("nodes"));
    ensure!(count("edges") >= 5, "{} edges", count("edges"));
    Ok(())
}

pub fn app(store: &Path) -> Router {
    let snapshot = Snapshot::load(&Store::new(store)).expect("fixture store loads");
    let state = AppState {
        snapshot,
        page_size: 20,
        pipeline: PipelineConfig::default(),
    };
    router(Arc::new(state), "*")
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().uri(uri).body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

pub async fn get_json(app: &Router, uri: &str) -> Result<Value, String> {
    let (status, body) = get(app, uri).await;
    ensure!(status == StatusCode::OK, "{uri}: status {status}");
    serde_json::from_slice(&body).map_err(|e| format!("{uri}: {e}"))
}

fn ids(list: &Value, key: &str) -> Vec<String> {
    list.as_array()
        .into_iter()
        .flatten()
        .map(|v| match &v[key] {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
        .collect()
}

fn contains_phrase(tokens: &[String], phrase: &[String]) -> bool {
    tokens.windows(phrase.len()).any(|w| w == phrase)
}

/// Unclustered indexed documents mentioning both endpoint names, by direct scan.
fn oracle_related(snap: &Snapshot, src: u64, dst: u64) -> BTreeSet<String> {
    let names: Vec<Vec<String>> = [src, dst].iter().map(|id| tokenize(&snap.graph.node(*id).unwrap().name)).collect();
    snap.index
        .meta
        .doc_sources
        .keys()
        .filter(|id| !snap.clustered.contains_key(*id))
        .filter(|id| {
            let d = &snap.documents[*id];
            let (title, body) = (tokenize(&d.title), tokenize(&d.body));
            names.iter().all(|n| contains_phrase(&title, n) || contains_phrase(&body, n))
        })
        .cloned()
        .collect()
}

pub async fn check_api_contract(store: &Path) -> Check {
    let app = app(store);
    let snap = Snapshot::load(&Store::new(store)).map_err(|e| e.to_string())?;

    let wuhan = get_json(&app, "/api/search?q=wuhan").await?;
    ensure!(
        wuhan["nodes"].as_array().unwrap().iter().any(|n| n["name"] == "Wuhan"),
        "no node named Wuhan in {}",
        wuhan["nodes"]
    );
    ensure!(!wuhan["documents"].as_array().unwrap().is_empty(), "wuhan matched no documents");

    for bad in [
        "/api/search?q=",
        "/api/search",
        "/api/search?q=%20%20",
        "/api/search?q=wuhan&types=PLANET",
        "/api/search?q=wuhan&sources=tv",
        "/api/search?q=wuhan&page=0",
        "/api/timeline?q=",
    ] {
        let (status, body) = get(&app, bad).await;
        ensure!(status == StatusCode::BAD_REQUEST, "{bad}: status {status}");
        let v: Value = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
        ensure!(v["error"].is_string(), "{bad}: error body {v}");
    }
    for missing in ["/api/edges/999999/documents", "/api/edges/abc/documents", "/api/nodes/999999/neighborhood", "/api/nothing"] {
        let (status, _) = get(&app, missing).await;
        ensure!(status == StatusCode::NOT_FOUND, "{missing}: status {status}");
    }

    let persons = get_json(&app, "/api/search?q=wuhan&types=PERSON").await?;
    for n in persons["nodes"].as_array().unwrap() {
        ensure!(n["type"] == "PERSON", "types=PERSON returned {}", n);
    }
    for q in ["singapore", "wuhan", "china", "health"] {
        let news = get_json(&app, &format!("/api/search?q={q}&sources=news")).await?;
        for d in news["documents"].as_array().unwrap() {
            ensure!(d["source_type"] == "news", "sources=news returned {}", d["doc_id"]);
        }
        for e in news["edges"].as_array().unwrap() {
            for p in e["provenance"].as_array().unwrap() {
                ensure!(p["source_type"] == "news", "edge {} kept social provenance", e["edge_id"]);
            }
        }
    }

    let page1 = get_json(&app, "/api/search?q=singapore").await?;
    let total = page1["total_documents"].as_u64().unwrap() as usize;
    ensure!(page1["documents"].as_array().unwrap().len() == total.min(20), "page 1 size");
    let page2 = get_json(&app, "/api/search?q=singapore&page=2").await?;
    ensure!(page2["documents"].as_array().unwrap().len() == total.saturating_sub(20).min(20), "page 2 size");

    ensure!(snap.graph.edge_count() > 0, "fixture graph has no edges");
    let mut with_related = 0;
    for edge in snap.graph.edges() {
        let v = get_json(&app, &format!("/api/edges/{}/documents", edge.edge_id)).await?;
        let cluster = &snap.clusters[&edge.provenance[0].cluster_id];
        ensure!(
            v["representative"]["doc_id"] == cluster.representative_doc_id.as_str(),
            "edge {}: representative {} vs {}",
            edge.edge_id,
            v["representative"]["doc_id"],
            cluster.representative_doc_id
        );
        ensure!(ids(&v["cluster_members"], "doc_id") == cluster.member_doc_ids, "edge {}: cluster members", edge.edge_id);
        let related: BTreeSet<String> = ids(&v["related"], "doc_id").into_iter().collect();
        let want = oracle_related(&snap, edge.src, edge.dst);
        ensure!(related == want, "edge {}: related {:?} vs scan {:?}", edge.edge_id, related, want);
        with_related += usize::from(!related.is_empty());
    }
    ensure!(with_related > 0, "no fixture edge has related unclustered documents");

    for q in ["wuhan", "singapore", "markets"] {
        let timeline = get_json(&app, &format!("/api/timeline?q={q}")).await?;
        let search = get_json(&app, &format!("/api/search?q={q}")).await?;
        let buckets = timeline.as_array().unwrap();
        let dates: Vec<&str> = buckets.iter().map(|b| b["date"].as_str().unwrap()).collect();
        ensure!(dates.windows(2).all(|w| w[0] < w[1]), "{q}: buckets not strictly ascending: {dates:?}");
        let mut seen = BTreeSet::new();
        for b in buckets {
            for d in b["documents"].as_array().unwrap() {
                ensure!(d["published_at"].as_str().unwrap().starts_with(b["date"].as_str().unwrap()), "{q}: doc in wrong bucket");
                seen.insert(d["doc_id"].as_str().unwrap().to_string());
            }
        }
        ensure!(seen.len() == search["total_documents"].as_u64().unwrap() as usize, "{q}: timeline and search disagree");
    }
    ensure!(get_json(&app, "/api/timeline?q=zzzzqqqq").await? == Value::Array(vec![]), "unmatched timeline not empty");

    let other = self::app(store);
    for uri in ["/api/search?q=wuhan", "/api/search?q=singapore%20OR%20china&types=LOCATION,COUNTRY", "/api/timeline?q=wuhan", "/api/edges/1/documents"] {
        let (_, first) = get(&app, uri).await;
        let (_, second) = get(&app, uri).await;
        let (_, fresh) = get(&other, uri).await;
        ensure!(first == second && first == fresh, "{uri}: bodies differ between identical requests");
    }
    Ok(())
}
