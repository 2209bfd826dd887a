//! Inverted index over entity names and document text.

mod query;
mod search;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use query::{has_explicit_syntax, parse_query, QueryAst, QueryError, QueryField};
pub use search::{execute_query, fallback_query, nlq_search, ItemId, SearchResult};

use crate::graph::{EdgeId, EntityNode, NodeId, NodeType, RelationEdge};
use crate::ingest::{Document, SourceType};
use crate::store::{read_json, write_json, StoreError};
use crate::text::tokenize;

pub const ENTITY_NAME_FILE: &str = "entity_name.json";
pub const DOC_TITLE_FILE: &str = "doc_title.json";
pub const DOC_BODY_FILE: &str = "doc_body.json";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityPosting {
    pub node_id: NodeId,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocPosting {
    pub doc_id: String,
    pub tf: u32,
    pub positions: Vec<u32>,
}

/// Postings for node names and aliases. Each node keeps its tokenized name
/// variants so phrases can be matched as token subsequences.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityField {
    pub doc_count: usize,
    pub postings: BTreeMap<String, Vec<EntityPosting>>,
    pub names: BTreeMap<NodeId, Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocField {
    pub doc_count: usize,
    pub postings: BTreeMap<String, Vec<DocPosting>>,
}

/// Item attributes used by `type:` / `source:` filters and edge expansion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexMeta {
    pub node_types: BTreeMap<NodeId, NodeType>,
    pub doc_sources: BTreeMap<String, SourceType>,
    pub incident: BTreeMap<NodeId, Vec<EdgeId>>,
    pub edges: BTreeMap<EdgeId, (NodeId, NodeId)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvertedIndex {
    pub entity_name: EntityField,
    pub doc_title: DocField,
    pub doc_body: DocField,
    pub meta: IndexMeta,
}

fn index_doc_field(field: &mut DocField, doc_id: &str, text: &str) {
    field.doc_count += 1;
    let mut positions: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for (i, tok) in tokenize(text).into_iter().enumerate() {
        positions.entry(tok).or_default().push(i as u32);
    }
    for (tok, pos) in positions {
        field.postings.entry(tok).or_default().push(DocPosting {
            doc_id: doc_id.to_string(),
            tf: pos.len() as u32,
            positions: pos,
        });
    }
}

impl InvertedIndex {
    /// Tokens keep their stop-words so phrases remain matchable.
    pub fn build<'a>(
        nodes: impl IntoIterator<Item = &'a EntityNode>,
        edges: impl IntoIterator<Item = &'a RelationEdge>,
        docs: impl IntoIterator<Item = &'a Document>,
    ) -> Self {
        let mut index = Self::default();
        let mut nodes: Vec<&EntityNode> = nodes.into_iter().collect();
        nodes.sort_by_key(|n| n.node_id);
        for node in nodes {
            index.entity_name.doc_count += 1;
            index.meta.node_types.insert(node.node_id, node.node_type);
            let variants: Vec<Vec<String>> = std::iter::once(node.name.as_str())
                .chain(node.aliases.iter().map(String::as_str))
                .map(tokenize)
                .filter(|t| !t.is_empty())
                .collect();
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for tok in variants.iter().flatten() {
                *tf.entry(tok).or_default() += 1;
            }
            for (tok, n) in tf {
                index
                    .entity_name
                    .postings
                    .entry(tok.to_string())
                    .or_default()
                    .push(EntityPosting { node_id: node.node_id, tf: n });
            }
            index.entity_name.names.insert(node.node_id, variants);
        }

        let mut docs: Vec<&Document> = docs.into_iter().collect();
        docs.sort_by(|a, b| a.id.cmp(&b.id));
        docs.dedup_by(|a, b| a.id == b.id);
        for doc in docs {
            index.meta.doc_sources.insert(doc.id.clone(), doc.source_type);
            index_doc_field(&mut index.doc_title, &doc.id, &doc.title);
            index_doc_field(&mut index.doc_body, &doc.id, &doc.body);
        }

        for edge in edges {
            index.meta.edges.insert(edge.edge_id, (edge.src, edge.dst));
        }
        let mut incident: BTreeMap<NodeId, BTreeSet<EdgeId>> = BTreeMap::new();
        for (&id, &(src, dst)) in &index.meta.edges {
            incident.entry(src).or_default().insert(id);
            incident.entry(dst).or_default().insert(id);
        }
        index.meta.incident = incident.into_iter().map(|(n, es)| (n, es.into_iter().collect())).collect();
        index
    }

    pub fn is_empty(&self) -> bool {
        self.entity_name.doc_count == 0 && self.doc_title.doc_count == 0
    }

    pub fn save(&self, dir: &Path) -> Result<(), StoreError> {
        std::fs::create_dir_all(dir).map_err(|source| StoreError::Io { path: dir.to_path_buf(), source })?;
        write_json(&dir.join(ENTITY_NAME_FILE), &self.entity_name)?;
        write_json(&dir.join(DOC_TITLE_FILE), &self.doc_title)?;
        write_json(&dir.join(DOC_BODY_FILE), &self.doc_body)?;
        write_json(&dir.join(META_FILE), &self.meta)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, StoreError> {
        Ok(Self {
            entity_name: read_json(&dir.join(ENTITY_NAME_FILE))?,
            doc_title: read_json(&dir.join(DOC_TITLE_FILE))?,
            doc_body: read_json(&dir.join(DOC_BODY_FILE))?,
            meta: read_json(&dir.join(META_FILE))?,
        })
    }
}
