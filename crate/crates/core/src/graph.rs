//! The disambiguated entity graph with provenance-bearing edges.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::SourceType;
use crate::relation::{EntityType, RelationTriple};
use crate::resources::{normalize_name, GeoGazetteer};

pub type NodeId = u64;
pub type EdgeId = u64;

pub const IN_COUNTRY: &str = "in_country";
pub const NODES_FILE: &str = "nodes.jsonl";
pub const EDGES_FILE: &str = "edges.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeType {
    Person,
    Org,
    Location,
    Country,
    Misc,
}

impl NodeType {
    pub const ALL: [NodeType; 5] = [
        NodeType::Person,
        NodeType::Org,
        NodeType::Location,
        NodeType::Country,
        NodeType::Misc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeType::Person => "PERSON",
            NodeType::Org => "ORG",
            NodeType::Location => "LOCATION",
            NodeType::Country => "COUNTRY",
            NodeType::Misc => "MISC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str().eq_ignore_ascii_case(s))
    }
}

impl From<Option<EntityType>> for NodeType {
    fn from(t: Option<EntityType>) -> Self {
        match t {
            Some(EntityType::Person) => NodeType::Person,
            Some(EntityType::Org) => NodeType::Org,
            Some(EntityType::Location) => NodeType::Location,
            Some(EntityType::Date | EntityType::Misc) | None => NodeType::Misc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityNode {
    pub node_id: NodeId,
    pub name: String,
    #[serde(rename = "type")]
    pub node_type: NodeType,
    /// Lowercase alternative surface forms. Never contains the lowercased name.
    pub aliases: BTreeSet<String>,
    pub props: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub doc_id: String,
    pub cluster_id: String,
    pub published_at: DateTime<Utc>,
    pub source_type: SourceType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub edge_id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub relation: String,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt snapshot {file} line {line}: {reason}")]
    CorruptSnapshot {
        file: &'static str,
        line: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subgraph {
    pub nodes: Vec<EntityNode>,
    pub edges: Vec<RelationEdge>,
}

/// The graph plus lookup tables rebuilt on load.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<NodeId, EntityNode>,
    edges: BTreeMap<EdgeId, RelationEdge>,
    by_name: HashMap<(String, NodeType), NodeId>,
    by_triple: HashMap<(NodeId, String, NodeId), EdgeId>,
    incident: HashMap<NodeId, BTreeSet<EdgeId>>,
    next_node: NodeId,
    next_edge: EdgeId,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

/// Leading articles are dropped from generic (MISC) node names.
fn canonical_misc(text: &str) -> &str {
    let mut s = text.trim();
    for article in ["the ", "a ", "an "] {
        if s.len() > article.len() && s[..article.len()].eq_ignore_ascii_case(article) {
            s = s[article.len()..].trim_start();
            break;
        }
    }
    s
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self {
            next_node: 1,
            next_edge: 1,
            ..Self::default()
        }
    }

    pub fn node(&self, id: NodeId) -> Option<&EntityNode> {
        self.nodes.get(&id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&RelationEdge> {
        self.edges.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &EntityNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &RelationEdge> {
        self.edges.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn incident_edges(&self, id: NodeId) -> impl Iterator<Item = EdgeId> + '_ {
        self.incident.get(&id).into_iter().flatten().copied()
    }

    pub fn find(&self, name: &str, node_type: NodeType) -> Option<NodeId> {
        self.by_name.get(&(normalize_name(name), node_type)).copied()
    }

    fn create_node(&mut self, name: &str, node_type: NodeType) -> NodeId {
        let id = self.next_node;
        self.next_node += 1;
        self.by_name.insert((normalize_name(name), node_type), id);
        self.nodes.insert(
            id,
            EntityNode {
                node_id: id,
                name: name.to_string(),
                node_type,
                aliases: BTreeSet::new(),
                props: BTreeMap::new(),
            },
        );
        id
    }

    fn add_alias(&mut self, id: NodeId, alias: &str) {
        let key = normalize_name(alias);
        let node = self.nodes.get_mut(&id).expect("alias target exists");
        if key != normalize_name(&node.name) {
            node.aliases.insert(key.clone());
        }
        self.by_name.insert((key, node.node_type), id);
    }

    /// Resolves a surface form to a node of the same type, creating one when
    /// needed. Person mentions merge by surname in both directions when the
    /// match is unique.
    pub fn disambiguate_name(&mut self, text: &str, node_type: NodeType) -> NodeId {
        let text = text.trim();
        if let Some(id) = self.find(text, node_type) {
            return id;
        }
        if node_type == NodeType::Person {
            let key = normalize_name(text);
            let tokens: Vec<&str> = key.split(' ').collect();
            let persons = || self.nodes.values().filter(|n| n.node_type == NodeType::Person);
            if tokens.len() == 1 {
                let matches: Vec<NodeId> = persons()
                    .filter(|n| {
                        let name = normalize_name(&n.name);
                        let parts: Vec<&str> = name.split(' ').collect();
                        parts.len() > 1 && parts[parts.len() - 1] == key
                    })
                    .map(|n| n.node_id)
                    .collect();
                if let [id] = matches[..] {
                    self.add_alias(id, text);
                    return id;
                }
            } else {
                let last = tokens[tokens.len() - 1];
                let matches: Vec<NodeId> = persons()
                    .filter(|n| normalize_name(&n.name) == last)
                    .map(|n| n.node_id)
                    .collect();
                if let [id] = matches[..] {
                    let node = self.nodes.get_mut(&id).expect("matched node exists");
                    let old = std::mem::replace(&mut node.name, text.to_string());
                    node.aliases.remove(&key);
                    self.add_alias(id, &old);
                    self.by_name.insert((key, NodeType::Person), id);
                    return id;
                }
            }
        }
        self.create_node(text, node_type)
    }

    fn find_or_create_edge(&mut self, src: NodeId, relation: &str, dst: NodeId, prov: &Provenance) -> (EdgeId, bool) {
        let key = (src, relation.to_string(), dst);
        if let Some(&id) = self.by_triple.get(&key) {
            let edge = self.edges.get_mut(&id).expect("indexed edge exists");
            if !edge.provenance.iter().any(|p| p.doc_id == prov.doc_id) {
                edge.provenance.push(prov.clone());
            }
            return (id, false);
        }
        let id = self.next_edge;
        self.next_edge += 1;
        self.edges.insert(
            id,
            RelationEdge {
                edge_id: id,
                src,
                dst,
                relation: relation.to_string(),
                provenance: vec![prov.clone()],
            },
        );
        self.by_triple.insert(key, id);
        self.incident.entry(src).or_default().insert(id);
        self.incident.entry(dst).or_default().insert(id);
        (id, true)
    }

    fn resolve_endpoint(&mut self, text: &str, node_type: NodeType, geo: &GeoGazetteer, prov: &Provenance) -> NodeId {
        let name = if node_type == NodeType::Misc { canonical_misc(text) } else { text.trim() };
        // a location that is itself a country shares the node its cities link to
        let node_type = match geo.lookup(name) {
            Some(row) if node_type == NodeType::Location && normalize_name(&row.country) == normalize_name(name) => {
                NodeType::Country
            }
            _ => node_type,
        };
        let id = self.disambiguate_name(name, node_type);
        if node_type == NodeType::Location {
            self.link_geo(id, geo, prov);
        }
        id
    }

    /// Inserts a triple, merging into an existing (src, relation, dst) edge
    /// when there is one. Returns the edge and whether it was created.
    pub fn upsert_triple(&mut self, triple: &RelationTriple, prov: &Provenance, geo: &GeoGazetteer) -> (EdgeId, bool) {
        let subject_type = NodeType::from(triple.subject_entity.as_ref().map(|e| e.entity_type));
        let object_type = NodeType::from(triple.object_entity.as_ref().map(|e| e.entity_type));
        let src = self.resolve_endpoint(&triple.subject, subject_type, geo, prov);
        let dst = self.resolve_endpoint(&triple.object, object_type, geo, prov);
        self.find_or_create_edge(src, &triple.relation, dst, prov)
    }

    /// Links a location to its country from the gazetteer. Returns `None` for
    /// unknown places, non-location nodes and places named like their country.
    pub fn link_geo(&mut self, location: NodeId, geo: &GeoGazetteer, prov: &Provenance) -> Option<EdgeId> {
        let node = self.nodes.get(&location)?;
        if node.node_type != NodeType::Location {
            return None;
        }
        let row = geo.lookup(&node.name)?.clone();
        if normalize_name(&row.country) == normalize_name(&node.name) {
            return None;
        }
        let node = self.nodes.get_mut(&location).expect("checked above");
        node.props.insert("country".into(), row.country.clone());
        node.props.insert("population".into(), row.population.to_string());
        let country = match self.find(&row.country, NodeType::Country) {
            Some(id) => id,
            None => self.create_node(&row.country, NodeType::Country),
        };
        Some(self.find_or_create_edge(location, IN_COUNTRY, country, prov).0)
    }

    /// Seeds, every edge touching a seed, and the far endpoints of those edges.
    pub fn neighborhood(&self, seeds: &[NodeId]) -> Result<Subgraph, GraphError> {
        let mut node_ids = BTreeSet::new();
        let mut edge_ids = BTreeSet::new();
        for &seed in seeds {
            if !self.nodes.contains_key(&seed) {
                return Err(GraphError::UnknownNode(seed));
            }
            node_ids.insert(seed);
            for e in self.incident_edges(seed) {
                edge_ids.insert(e);
                let edge = &self.edges[&e];
                node_ids.insert(edge.src);
                node_ids.insert(edge.dst);
            }
        }
        Ok(Subgraph {
            nodes: node_ids.into_iter().map(|id| self.nodes[&id].clone()).collect(),
            edges: edge_ids.into_iter().map(|id| self.edges[&id].clone()).collect(),
        })
    }

    pub fn save(&self, dir: &Path) -> Result<(), GraphError> {
        fs::create_dir_all(dir)?;
        write_jsonl_atomic(&dir.join(NODES_FILE), self.nodes.values())?;
        write_jsonl_atomic(&dir.join(EDGES_FILE), self.edges.values())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, GraphError> {
        let nodes: Vec<EntityNode> = read_jsonl(&dir.join(NODES_FILE), NODES_FILE)?;
        let edges: Vec<RelationEdge> = read_jsonl(&dir.join(EDGES_FILE), EDGES_FILE)?;
        let mut graph = Self::new();
        for (i, node) in nodes.into_iter().enumerate() {
            let corrupt = |reason: &str| GraphError::CorruptSnapshot {
                file: NODES_FILE,
                line: i + 1,
                reason: reason.into(),
            };
            if node.name.trim().is_empty() {
                return Err(corrupt("empty name"));
            }
            if graph.nodes.contains_key(&node.node_id) {
                return Err(corrupt("duplicate node id"));
            }
            graph.next_node = graph.next_node.max(node.node_id + 1);
            graph.by_name.insert((normalize_name(&node.name), node.node_type), node.node_id);
            for alias in &node.aliases {
                graph.by_name.insert((alias.clone(), node.node_type), node.node_id);
            }
            graph.nodes.insert(node.node_id, node);
        }
        for (i, edge) in edges.into_iter().enumerate() {
            let corrupt = |reason: &str| GraphError::CorruptSnapshot {
                file: EDGES_FILE,
                line: i + 1,
                reason: reason.into(),
            };
            if !graph.nodes.contains_key(&edge.src) || !graph.nodes.contains_key(&edge.dst) {
                return Err(corrupt("dangling endpoint"));
            }
            if edge.provenance.is_empty() {
                return Err(corrupt("edge without provenance"));
            }
            if graph.edges.contains_key(&edge.edge_id) {
                return Err(corrupt("duplicate edge id"));
            }
            graph.next_edge = graph.next_edge.max(edge.edge_id + 1);
            graph.by_triple.insert((edge.src, edge.relation.clone(), edge.dst), edge.edge_id);
            graph.incident.entry(edge.src).or_default().insert(edge.edge_id);
            graph.incident.entry(edge.dst).or_default().insert(edge.edge_id);
            graph.edges.insert(edge.edge_id, edge);
        }
        Ok(graph)
    }
}

fn write_jsonl_atomic<'a, T: Serialize + 'a>(path: &Path, items: impl Iterator<Item = &'a T>) -> std::io::Result<()> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut file = std::io::BufWriter::new(fs::File::create(&tmp)?);
        for item in items {
            serde_json::to_writer(&mut file, item)?;
            file.write_all(b"\n")?;
        }
        file.flush()?;
    }
    fs::rename(tmp, path)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path, file: &'static str) -> Result<Vec<T>, GraphError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| GraphError::CorruptSnapshot {
                file,
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}
