//! On-disk layout of a pipeline store and atomic JSON helpers.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{ClusterAssignment, EventCluster};
use crate::graph::{GraphError, KnowledgeGraph};
use crate::index::InvertedIndex;
use crate::ingest::{Document, SourceType};
use crate::relation::RelationTriple;
use crate::resources::{ResourceError, Resources};
use crate::text::RejectReason;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path} line {line}: {reason}")]
    Corrupt { path: PathBuf, line: usize, reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Resources(#[from] ResourceError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<(), StoreError> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).expect("in-memory serialization");
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| StoreError::Corrupt {
                path: path.to_path_buf(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Like [`read_jsonl`] but a missing file reads as empty.
pub fn read_jsonl_or_empty<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    if path.exists() {
        read_jsonl(path)
    } else {
        Ok(Vec::new())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let mut buf = serde_json::to_vec(value).expect("in-memory serialization");
    buf.push(b'\n');
    write_atomic(path, &buf)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
        path: path.to_path_buf(),
        line: e.line(),
        reason: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub doc_id: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedTriple {
    pub cluster_id: String,
    #[serde(flatten)]
    pub triple: RelationTriple,
}

/// Paths of every artifact a pipeline run writes.
#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn documents_path(&self) -> PathBuf {
        self.root.join("documents.jsonl")
    }

    pub fn prepared_path(&self) -> PathBuf {
        self.root.join("prepared.jsonl")
    }

    pub fn rejected_path(&self) -> PathBuf {
        self.root.join("rejected.jsonl")
    }

    pub fn resources_dir(&self) -> PathBuf {
        self.root.join("resources")
    }

    pub fn pca_path(&self, source: SourceType) -> PathBuf {
        self.root.join(format!("pca_{}.json", source.as_str()))
    }

    pub fn clusters_path(&self) -> PathBuf {
        self.root.join("clusters.jsonl")
    }

    pub fn assignments_path(&self) -> PathBuf {
        self.root.join("assignments.jsonl")
    }

    pub fn triples_path(&self) -> PathBuf {
        self.root.join("triples.jsonl")
    }

    pub fn graph_dir(&self) -> PathBuf {
        self.root.join("graph")
    }

    pub fn index_dir(&self) -> PathBuf {
        self.root.join("index")
    }

    pub fn load_documents(&self) -> Result<Vec<Document>, StoreError> {
        read_jsonl_or_empty(&self.documents_path())
    }

    pub fn load_clusters(&self) -> Result<Vec<EventCluster>, StoreError> {
        read_jsonl_or_empty(&self.clusters_path())
    }

    pub fn load_assignments(&self) -> Result<Vec<ClusterAssignment>, StoreError> {
        read_jsonl_or_empty(&self.assignments_path())
    }

    pub fn load_graph(&self) -> Result<KnowledgeGraph, StoreError> {
        let dir = self.graph_dir();
        if !dir.join(crate::graph::NODES_FILE).exists() {
            return Ok(KnowledgeGraph::new());
        }
        Ok(KnowledgeGraph::load(&dir)?)
    }
}

/// A fully built store held in memory for read-only serving.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub documents: BTreeMap<String, Document>,
    pub clusters: BTreeMap<String, EventCluster>,
    /// Documents that belong to some cluster.
    pub clustered: BTreeMap<String, String>,
    pub graph: KnowledgeGraph,
    pub index: InvertedIndex,
    pub resources: Resources,
}

impl Snapshot {
    pub fn load(store: &Store) -> Result<Self, StoreError> {
        let documents = store.load_documents()?.into_iter().map(|d| (d.id.clone(), d)).collect();
        let clusters: BTreeMap<String, EventCluster> =
            store.load_clusters()?.into_iter().map(|c| (c.cluster_id.clone(), c)).collect();
        let clustered = clusters
            .values()
            .flat_map(|c| c.member_doc_ids.iter().map(|d| (d.clone(), c.cluster_id.clone())))
            .collect();
        Ok(Self {
            documents,
            clusters,
            clustered,
            graph: store.load_graph()?,
            index: InvertedIndex::load(&store.index_dir())?,
            resources: Resources::load(&store.resources_dir())?,
        })
    }
}
