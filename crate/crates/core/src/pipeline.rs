//! Offline pipeline stages, each reading and writing a [`Store`].

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use serde::Serialize;
use thiserror::Error;
use tracing::{info, warn};

use crate::cluster::{cluster_period, ClusterAssignment, ClusterError, EventCluster};
use crate::config::{ConfigError, PipelineConfig};
use crate::descriptors::extract_descriptors;
use crate::embed::{embed_document, load_vectors, VectorsError};
use crate::graph::{KnowledgeGraph, Provenance, GraphError};
use crate::index::InvertedIndex;
use crate::ingest::{dedupe_corpus, fetch_rss, parse_corpus_line, Document, IngestError, SourceType};
use crate::pca::{pca_fit, PcaError};
use crate::relation::extract_relations;
use crate::resources::{Resources, ALL_FILES, VECTORS_FILE};
use crate::store::{read_jsonl, read_jsonl_or_empty, write_json, write_jsonl, ExtractedTriple, Rejection, Store, StoreError};
use crate::text::{prepare as prepare_doc, Prepared, PreparedDoc};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("feed {name}: {source}")]
    Feed { name: String, source: IngestError },
    #[error(transparent)]
    Vectors(#[from] VectorsError),
    #[error("PCA for {source_type}: {error}")]
    Pca { source_type: SourceType, error: PcaError },
    #[error("clustering {0}: {1}")]
    Cluster(String, ClusterError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0} is missing; run the `{1}` stage first")]
    MissingStage(String, &'static str),
}

fn require(path: &Path, stage: &'static str) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::MissingStage(path.display().to_string(), stage))
    }
}

/// A corpus line that failed to parse.
#[derive(Debug, Clone, Serialize)]
pub struct LineError {
    pub file: String,
    pub line: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub read: usize,
    pub accepted: usize,
    pub duplicates: usize,
    pub id_collisions: usize,
    pub invalid: Vec<LineError>,
    pub stored: usize,
}

/// A fetched RSS feed; fetching itself happens outside the core library.
#[derive(Debug, Clone)]
pub struct Feed {
    pub source_name: String,
    pub xml: String,
}

/// Merges corpus files and feeds into the store's document list. Invalid lines
/// are reported and skipped; duplicate bodies and reused ids are dropped.
pub fn ingest(store: &Store, corpus_files: &[&Path], feeds: &[Feed], now: DateTime<Utc>) -> Result<IngestReport, PipelineError> {
    let mut report = IngestReport::default();
    let mut docs = store.load_documents()?;
    let existing = docs.len();
    for path in corpus_files {
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            report.read += 1;
            match parse_corpus_line(line) {
                Ok(doc) => docs.push(doc),
                Err(e) => {
                    warn!(file = %path.display(), line = i + 1, error = %e, "skipping corpus line");
                    report.invalid.push(LineError {
                        file: path.display().to_string(),
                        line: i + 1,
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    for feed in feeds {
        let items = fetch_rss(&feed.xml, &feed.source_name, now).map_err(|source| PipelineError::Feed {
            name: feed.source_name.clone(),
            source,
        })?;
        report.read += items.len();
        docs.extend(items);
    }
    report.accepted = docs.len() - existing;

    let mut seen = HashSet::new();
    let before = docs.len();
    docs.retain(|d| seen.insert(d.id.clone()));
    report.id_collisions = before - docs.len();
    let before = docs.len();
    let docs = dedupe_corpus(docs);
    report.duplicates = before - docs.len();
    report.stored = docs.len();
    write_jsonl(&store.documents_path(), &docs)?;
    info!(stored = report.stored, "ingest complete");
    Ok(report)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PrepareReport {
    pub prepared: usize,
    pub non_english: usize,
    pub no_tokens: usize,
}

/// Copies the resource files into the store, then tokenizes every document.
pub fn prepare(store: &Store, resources_dir: &Path, cfg: &PipelineConfig) -> Result<PrepareReport, PipelineError> {
    cfg.validate()?;
    require(&store.documents_path(), "ingest")?;
    let target = store.resources_dir();
    if resources_dir != target {
        fs::create_dir_all(&target).map_err(|source| PipelineError::Io {
            path: target.display().to_string(),
            source,
        })?;
        for name in ALL_FILES {
            let (from, to) = (resources_dir.join(name), target.join(name));
            fs::copy(&from, &to).map_err(|source| PipelineError::Io {
                path: from.display().to_string(),
                source,
            })?;
        }
    }
    let res = Resources::load(&target).map_err(StoreError::from)?;
    let docs = store.load_documents()?;
    let mut prepared = Vec::new();
    let mut rejected = Vec::new();
    for doc in &docs {
        match prepare_doc(doc, &res.stoplist, &res.lemmas, cfg.english_threshold) {
            Prepared::Doc(p) => prepared.push(p),
            Prepared::Rejected(reason) => rejected.push(Rejection { doc_id: doc.id.clone(), reason }),
        }
    }
    write_jsonl(&store.prepared_path(), &prepared)?;
    write_jsonl(&store.rejected_path(), &rejected)?;
    let count = |r| rejected.iter().filter(|x| x.reason == r).count();
    Ok(PrepareReport {
        prepared: prepared.len(),
        non_english: count(crate::text::RejectReason::NonEnglish),
        no_tokens: count(crate::text::RejectReason::NoTokens),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceClusterReport {
    pub source_type: SourceType,
    pub documents: usize,
    pub pca_k: usize,
    pub explained_variance_ratio: f64,
    pub periods: usize,
    pub clusters: usize,
    pub noise: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ClusterReport {
    pub no_vocabulary_overlap: usize,
    pub sources: Vec<SourceClusterReport>,
    pub clusters: usize,
}

/// Embeds, reduces per source type and clusters per (source, UTC day).
pub fn cluster(store: &Store, cfg: &PipelineConfig) -> Result<ClusterReport, PipelineError> {
    cfg.validate()?;
    require(&store.prepared_path(), "prepare")?;
    let table = load_vectors(&store.resources_dir().join(VECTORS_FILE), cfg.embed_dims)?;
    let docs: BTreeMap<String, Document> = store.load_documents()?.into_iter().map(|d| (d.id.clone(), d)).collect();
    let prepared: Vec<PreparedDoc> = read_jsonl(&store.prepared_path())?;

    let mut report = ClusterReport::default();
    let mut by_source: BTreeMap<SourceType, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for p in &prepared {
        let Some(doc) = docs.get(&p.doc_id) else { continue };
        match embed_document(p, &table) {
            Ok(v) => {
                by_source.entry(doc.source_type).or_default().insert(v.doc_id, v.vector);
            }
            Err(_) => report.no_vocabulary_overlap += 1,
        }
    }

    let grid = cfg.eps_grid();
    let mut assignments: Vec<ClusterAssignment> = Vec::new();
    let mut clusters: Vec<EventCluster> = Vec::new();
    for source in SourceType::ALL {
        let path = store.pca_path(source);
        let vectors = by_source.remove(&source).unwrap_or_default();
        if vectors.len() < 2 {
            if path.exists() {
                fs::remove_file(&path).map_err(|e| PipelineError::Io { path: path.display().to_string(), source: e })?;
            }
            continue;
        }
        let n = vectors.len();
        let k = cfg.pca_dims.min(n - 1).min(cfg.embed_dims);
        if k < cfg.pca_dims {
            warn!(%source, requested = cfg.pca_dims, k, "clamping PCA dimensions to corpus size");
        }
        let rows: Vec<Vec<f64>> = vectors.values().cloned().collect();
        let model = pca_fit(&rows, k).map_err(|error| PipelineError::Pca { source_type: source, error })?;
        write_json(&path, &model)?;

        let mut periods: BTreeMap<NaiveDate, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
        for (id, v) in &vectors {
            let reduced = model.transform(v).map_err(|error| PipelineError::Pca { source_type: source, error })?;
            periods.entry(docs[id].period()).or_default().insert(id.clone(), reduced);
        }
        let mut summary = SourceClusterReport {
            source_type: source,
            documents: n,
            pca_k: k,
            explained_variance_ratio: model.explained_variance_ratio,
            periods: periods.len(),
            clusters: 0,
            noise: 0,
        };
        for (period, points) in &periods {
            let (a, c) = cluster_period(source, *period, points, &grid, cfg.dbscan_min_pts)
                .map_err(|e| PipelineError::Cluster(format!("{source} {period}"), e))?;
            summary.noise += a.iter().filter(|x| x.label < 0).count();
            summary.clusters += c.len();
            assignments.extend(a);
            clusters.extend(c);
        }
        report.sources.push(summary);
    }
    report.clusters = clusters.len();
    write_jsonl(&store.assignments_path(), &assignments)?;
    write_jsonl(&store.clusters_path(), &clusters)?;
    Ok(report)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExtractReport {
    pub clusters: usize,
    pub entities: usize,
    pub triples: usize,
}

/// Runs 5W1H and relation extraction over each cluster's representative.
pub fn extract(store: &Store, cfg: &PipelineConfig) -> Result<ExtractReport, PipelineError> {
    cfg.validate()?;
    require(&store.clusters_path(), "cluster")?;
    let res = Resources::load(&store.resources_dir()).map_err(StoreError::from)?;
    let docs: BTreeMap<String, Document> = store.load_documents()?.into_iter().map(|d| (d.id.clone(), d)).collect();
    let mut clusters = store.load_clusters()?;
    let mut triples = Vec::new();
    let mut report = ExtractReport { clusters: clusters.len(), ..Default::default() };
    for c in &mut clusters {
        let doc = docs.get(&c.representative_doc_id).ok_or_else(|| StoreError::Corrupt {
            path: store.clusters_path(),
            line: 0,
            reason: format!("unknown representative {}", c.representative_doc_id),
        })?;
        let (entities, found) = extract_relations(doc, &res);
        c.w5h1 = Some(extract_descriptors(&c.cluster_id, doc, &entities, &res, cfg));
        report.entities += entities.len();
        triples.extend(found.into_iter().map(|triple| ExtractedTriple { cluster_id: c.cluster_id.clone(), triple }));
    }
    report.triples = triples.len();
    write_jsonl(&store.clusters_path(), &clusters)?;
    write_jsonl(&store.triples_path(), &triples)?;
    Ok(report)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GraphReport {
    pub triples: usize,
    pub nodes: usize,
    pub edges: usize,
}

pub fn graph_build(store: &Store) -> Result<GraphReport, PipelineError> {
    require(&store.triples_path(), "extract")?;
    let res = Resources::load(&store.resources_dir()).map_err(StoreError::from)?;
    let docs: BTreeMap<String, Document> = store.load_documents()?.into_iter().map(|d| (d.id.clone(), d)).collect();
    let triples: Vec<ExtractedTriple> = read_jsonl(&store.triples_path())?;
    let mut graph = KnowledgeGraph::new();
    for t in &triples {
        let Some(doc) = docs.get(&t.triple.doc_id) else {
            warn!(doc = %t.triple.doc_id, "triple from unknown document");
            continue;
        };
        let prov = Provenance {
            doc_id: doc.id.clone(),
            cluster_id: t.cluster_id.clone(),
            published_at: doc.published_at,
            source_type: doc.source_type,
        };
        graph.upsert_triple(&t.triple, &prov, &res.geo);
    }
    graph.save(&store.graph_dir())?;
    Ok(GraphReport { triples: triples.len(), nodes: graph.node_count(), edges: graph.edge_count() })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IndexReport {
    pub nodes: usize,
    pub documents: usize,
    pub tokens: usize,
}

/// Indexes graph nodes and every document that passed preparation.
pub fn index(store: &Store) -> Result<IndexReport, PipelineError> {
    require(&store.graph_dir().join(crate::graph::NODES_FILE), "graph-build")?;
    let graph = store.load_graph()?;
    let prepared: Vec<PreparedDoc> = read_jsonl_or_empty(&store.prepared_path())?;
    let keep: HashSet<&str> = prepared.iter().map(|p| p.doc_id.as_str()).collect();
    let docs: Vec<Document> = store.load_documents()?.into_iter().filter(|d| keep.contains(d.id.as_str())).collect();
    let idx = InvertedIndex::build(graph.nodes(), graph.edges(), &docs);
    idx.save(&store.index_dir())?;
    let mut vocab: HashSet<&str> = idx.entity_name.postings.keys().map(String::as_str).collect();
    vocab.extend(idx.doc_title.postings.keys().map(String::as_str));
    vocab.extend(idx.doc_body.postings.keys().map(String::as_str));
    Ok(IndexReport { nodes: graph.node_count(), documents: docs.len(), tokens: vocab.len() })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Stats {
    pub documents: usize,
    pub clusters: usize,
    pub nodes: usize,
    pub edges: usize,
}

/// Counts whatever artifacts exist; a fresh store is all zeros.
pub fn stats(store: &Store) -> Result<Stats, PipelineError> {
    let graph = store.load_graph()?;
    Ok(Stats {
        documents: store.load_documents()?.len(),
        clusters: store.load_clusters()?.len(),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
    })
}
