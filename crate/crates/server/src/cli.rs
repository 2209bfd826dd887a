use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use eventgraph_core::config::PipelineConfig;
use eventgraph_core::index::nlq_search;
use eventgraph_core::pipeline::{self, Feed};
use eventgraph_core::store::{Snapshot, Store};

use crate::api::{router, AppState};
use crate::config::ServiceConfig;

#[derive(Debug, Parser)]
#[command(name = "eventgraph", version, about = "Event clustering, entity graph and retrieval over news and social posts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct StoreArg {
    /// Store directory
    #[arg(long)]
    pub store: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load JSONL corpora and RSS feeds into a store
    Ingest {
        #[arg(long, num_args = 1..)]
        corpus: Vec<PathBuf>,
        /// RSS feed URL or local file
        #[arg(long, num_args = 1..)]
        rss: Vec<String>,
        #[arg(long, alias = "store")]
        out: PathBuf,
        /// Timestamp used for feed items without a pubDate (RFC 3339)
        #[arg(long)]
        now: Option<String>,
    },
    /// Tokenize documents and snapshot the resource files
    Prepare {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long, default_value = "data/resources")]
        resources: PathBuf,
        #[arg(long)]
        english_threshold: Option<f64>,
    },
    /// Embed, reduce and cluster documents per source and day
    Cluster {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long)]
        min_pts: Option<usize>,
        #[arg(long)]
        eps_min: Option<f64>,
        #[arg(long)]
        eps_max: Option<f64>,
        #[arg(long)]
        eps_step: Option<f64>,
        #[arg(long)]
        pca_dims: Option<usize>,
    },
    /// Extract 5W1H descriptors and relation triples from representatives
    Extract {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Build the entity graph from extracted triples
    GraphBuild {
        #[command(flatten)]
        store: StoreArg,
    },
    /// Build the inverted index
    Index {
        #[command(flatten)]
        store: StoreArg,
    },
    /// Serve the HTTP API
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a query and print the result as JSON
    Query {
        q: String,
        #[command(flatten)]
        store: StoreArg,
    },
    /// Print document, cluster, node and edge counts
    Stats {
        #[command(flatten)]
        store: StoreArg,
    },
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn read_feed(src: &str) -> Result<Feed> {
    if src.starts_with("http://") || src.starts_with("https://") {
        let xml = ureq::get(src)
            .call()
            .with_context(|| format!("fetching {src}"))?
            .body_mut()
            .read_to_string()
            .with_context(|| format!("reading {src}"))?;
        let host = src.split("://").nth(1).and_then(|r| r.split('/').next()).unwrap_or(src);
        return Ok(Feed { source_name: host.to_string(), xml });
    }
    let path = Path::new(src);
    let xml = std::fs::read_to_string(path).with_context(|| format!("reading {src}"))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(src);
    Ok(Feed { source_name: name.to_string(), xml })
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = PipelineConfig::default();
    match cli.command {
        Command::Ingest { corpus, rss, out, now } => {
            if corpus.is_empty() && rss.is_empty() {
                bail!("nothing to ingest: pass --corpus and/or --rss");
            }
            let now: DateTime<Utc> = match now {
                Some(s) => DateTime::parse_from_rfc3339(&s).context("--now")?.with_timezone(&Utc),
                None => Utc::now(),
            };
            let feeds = rss.iter().map(|s| read_feed(s)).collect::<Result<Vec<_>>>()?;
            let files: Vec<&Path> = corpus.iter().map(PathBuf::as_path).collect();
            print_json(&pipeline::ingest(&Store::new(out), &files, &feeds, now)?)
        }
        Command::Prepare { store, resources, english_threshold } => {
            if let Some(t) = english_threshold {
                cfg.english_threshold = t;
            }
            print_json(&pipeline::prepare(&Store::new(store.store), &resources, &cfg)?)
        }
        Command::Cluster { store, min_pts, eps_min, eps_max, eps_step, pca_dims } => {
            cfg.dbscan_min_pts = min_pts.unwrap_or(cfg.dbscan_min_pts);
            cfg.eps_min = eps_min.unwrap_or(cfg.eps_min);
            cfg.eps_max = eps_max.unwrap_or(cfg.eps_max);
            cfg.eps_step = eps_step.unwrap_or(cfg.eps_step);
            cfg.pca_dims = pca_dims.unwrap_or(cfg.pca_dims);
            print_json(&pipeline::cluster(&Store::new(store.store), &cfg)?)
        }
        Command::Extract { store, top_k } => {
            cfg.top_k_descriptors = top_k.unwrap_or(cfg.top_k_descriptors);
            print_json(&pipeline::extract(&Store::new(store.store), &cfg)?)
        }
        Command::GraphBuild { store } => print_json(&pipeline::graph_build(&Store::new(store.store))?),
        Command::Index { store } => print_json(&pipeline::index(&Store::new(store.store))?),
        Command::Query { q, store } => {
            let snap = Snapshot::load(&Store::new(store.store))?;
            let result = nlq_search(
                &snap.index,
                &snap.graph,
                &q,
                &snap.resources.stoplist,
                &snap.resources.lemmas,
                cfg.fuzzy_max_edits,
            )?;
            print_json(&result)
        }
        Command::Stats { store } => print_json(&pipeline::stats(&Store::new(store.store))?),
        Command::Serve { config } => serve(ServiceConfig::load(&config)?, cfg),
    }
}

fn serve(service: ServiceConfig, pipeline: PipelineConfig) -> Result<()> {
    let snapshot = Snapshot::load(&Store::new(&service.store_dir))
        .with_context(|| format!("loading store {}", service.store_dir.display()))?;
    let state = Arc::new(AppState { snapshot, page_size: service.page_size, pipeline });
    let app = router(state, &service.cors_allowed_origin);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&service.listen_address)
            .await
            .with_context(|| format!("binding {}", service.listen_address))?;
        tracing::info!(address = %service.listen_address, "serving");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
