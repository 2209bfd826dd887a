//! Read-only JSON API over a loaded store.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

use eventgraph_core::config::PipelineConfig;
use eventgraph_core::graph::{EdgeId, EntityNode, NodeId, NodeType, Provenance, RelationEdge};
use eventgraph_core::index::{execute_query, nlq_search, QueryAst, QueryError, SearchResult};
use eventgraph_core::ingest::{Document, SourceType};
use eventgraph_core::store::Snapshot;
use eventgraph_core::text::tokenize;

pub struct AppState {
    pub snapshot: Snapshot,
    pub page_size: usize,
    pub pipeline: PipelineConfig,
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    status: u16,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, msg) = match &self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
        };
        (status, Json(ErrorBody { error: msg, status: status.as_u16() })).into_response()
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        ApiError::BadRequest(e.to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeView {
    pub node_id: NodeId,
    pub name: String,
    #[serde(rename = "type")]
    pub node_type: NodeType,
    pub aliases: BTreeSet<String>,
    pub props: BTreeMap<String, String>,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeView {
    pub edge_id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub relation: String,
    pub provenance: Vec<Provenance>,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DocView {
    pub doc_id: String,
    pub source_type: SourceType,
    pub source_name: String,
    pub url: String,
    pub title: String,
    pub body: String,
    pub published_at: DateTime<Utc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResponse {
    pub query: String,
    pub nodes: Vec<NodeView>,
    pub edges: Vec<EdgeView>,
    pub documents: Vec<DocView>,
    pub page: usize,
    pub page_size: usize,
    pub total_documents: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeDocumentsResponse {
    pub edge: EdgeView,
    pub cluster_id: String,
    pub representative: DocView,
    pub cluster_members: Vec<DocView>,
    pub related: Vec<DocView>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimelineBucket {
    pub date: NaiveDate,
    pub documents: Vec<DocView>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NeighborhoodResponse {
    pub nodes: Vec<NodeView>,
    pub edges: Vec<EdgeView>,
}

#[derive(Debug, Default, Deserialize)]
pub struct SearchParams {
    pub q: Option<String>,
    pub types: Option<String>,
    pub sources: Option<String>,
    pub page: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
pub struct TimelineParams {
    pub q: Option<String>,
}

fn node_view(node: &EntityNode, score: f64) -> NodeView {
    NodeView {
        node_id: node.node_id,
        name: node.name.clone(),
        node_type: node.node_type,
        aliases: node.aliases.clone(),
        props: node.props.clone(),
        score,
    }
}

fn edge_view(edge: &RelationEdge, score: f64) -> EdgeView {
    EdgeView {
        edge_id: edge.edge_id,
        src: edge.src,
        dst: edge.dst,
        relation: edge.relation.clone(),
        provenance: edge.provenance.clone(),
        score,
    }
}

impl AppState {
    fn doc_view(&self, doc: &Document, score: Option<f64>) -> DocView {
        DocView {
            doc_id: doc.id.clone(),
            source_type: doc.source_type,
            source_name: doc.source_name.clone(),
            url: doc.url.clone(),
            title: doc.title.clone(),
            body: doc.body.clone(),
            published_at: doc.published_at,
            cluster_id: self.snapshot.clustered.get(&doc.id).cloned(),
            score,
        }
    }

    fn search(&self, q: Option<&str>) -> Result<SearchResult, ApiError> {
        let q = q.unwrap_or("");
        let res = &self.snapshot.resources;
        Ok(nlq_search(
            &self.snapshot.index,
            &self.snapshot.graph,
            q,
            &res.stoplist,
            &res.lemmas,
            self.pipeline.fuzzy_max_edits,
        )?)
    }
}

/// Comma-separated filter values; absent or empty means "all".
fn parse_filter<T: Copy + Ord>(raw: Option<&str>, all: &[T], parse: impl Fn(&str) -> Option<T>, what: &str) -> Result<BTreeSet<T>, ApiError> {
    let Some(raw) = raw.filter(|r| !r.trim().is_empty()) else {
        return Ok(all.iter().copied().collect());
    };
    raw.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(v).ok_or_else(|| ApiError::BadRequest(format!("unknown {what} `{v}`"))))
        .collect()
}

async fn search_handler(State(state): State<Arc<AppState>>, Query(params): Query<SearchParams>) -> Result<Json<SearchResponse>, ApiError> {
    let types = parse_filter(params.types.as_deref(), &NodeType::ALL, NodeType::parse, "node type")?;
    let sources = parse_filter(params.sources.as_deref(), &SourceType::ALL, |s| SourceType::parse(&s.to_lowercase()), "source")?;
    let page = match params.page.as_deref() {
        None | Some("") => 1,
        Some(p) => p
            .parse::<usize>()
            .ok()
            .filter(|p| *p >= 1)
            .ok_or_else(|| ApiError::BadRequest(format!("invalid page `{p}`")))?,
    };
    let result = state.search(params.q.as_deref())?;
    let snap = &state.snapshot;

    let nodes: Vec<NodeView> = result
        .node_ids
        .iter()
        .filter_map(|id| snap.graph.node(*id))
        .filter(|n| types.contains(&n.node_type))
        .map(|n| node_view(n, result.score(&format!("node:{}", n.node_id))))
        .collect();
    let shown: BTreeSet<NodeId> = nodes.iter().map(|n| n.node_id).collect();
    let edges: Vec<EdgeView> = result
        .edge_ids
        .iter()
        .filter_map(|id| snap.graph.edge(*id))
        .filter(|e| shown.contains(&e.src) && shown.contains(&e.dst))
        .filter_map(|e| {
            let provenance: Vec<Provenance> =
                e.provenance.iter().filter(|p| sources.contains(&p.source_type)).cloned().collect();
            (!provenance.is_empty()).then(|| EdgeView {
                provenance,
                ..edge_view(e, result.score(&format!("edge:{}", e.edge_id)))
            })
        })
        .collect();
    let docs: Vec<&Document> = result
        .doc_ids
        .iter()
        .filter_map(|id| snap.documents.get(id))
        .filter(|d| sources.contains(&d.source_type))
        .collect();
    let total_documents = docs.len();
    let documents = docs
        .into_iter()
        .skip((page - 1).saturating_mul(state.page_size))
        .take(state.page_size)
        .map(|d| state.doc_view(d, Some(result.score(&format!("doc:{}", d.id)))))
        .collect();
    Ok(Json(SearchResponse {
        query: params.q.unwrap_or_default(),
        nodes,
        edges,
        documents,
        page,
        page_size: state.page_size,
        total_documents,
    }))
}

/// Documents matching both endpoint names that no cluster contains.
fn related_documents(state: &AppState, edge: &RelationEdge) -> Vec<String> {
    let snap = &state.snapshot;
    let phrase = |id: NodeId| {
        let tokens = snap.graph.node(id).map(|n| tokenize(&n.name)).unwrap_or_default();
        (!tokens.is_empty()).then_some(QueryAst::Phrase { tokens })
    };
    let (Some(a), Some(b)) = (phrase(edge.src), phrase(edge.dst)) else {
        return Vec::new();
    };
    let ast = if a == b { a } else { QueryAst::and(vec![a, b]) };
    execute_query(&snap.index, &ast, state.pipeline.fuzzy_max_edits)
        .doc_ids
        .into_iter()
        .filter(|id| !snap.clustered.contains_key(id))
        .collect()
}

async fn edge_documents_handler(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<EdgeDocumentsResponse>, ApiError> {
    let snap = &state.snapshot;
    let not_found = || ApiError::NotFound(format!("unknown edge `{id}`"));
    let edge_id: EdgeId = id.parse().map_err(|_| not_found())?;
    let edge = snap.graph.edge(edge_id).ok_or_else(not_found)?;
    let prov = edge.provenance.first().ok_or_else(not_found)?;
    let cluster = snap
        .clusters
        .get(&prov.cluster_id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown cluster `{}`", prov.cluster_id)))?;
    let doc = |id: &String| snap.documents.get(id).map(|d| state.doc_view(d, None));
    let representative = doc(&cluster.representative_doc_id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown document `{}`", cluster.representative_doc_id)))?;
    Ok(Json(EdgeDocumentsResponse {
        edge: edge_view(edge, 0.0),
        cluster_id: cluster.cluster_id.clone(),
        representative,
        cluster_members: cluster.member_doc_ids.iter().filter_map(doc).collect(),
        related: related_documents(&state, edge).iter().filter_map(doc).collect(),
    }))
}

async fn timeline_handler(State(state): State<Arc<AppState>>, Query(params): Query<TimelineParams>) -> Result<Json<Vec<TimelineBucket>>, ApiError> {
    let result = state.search(params.q.as_deref())?;
    let mut buckets: BTreeMap<NaiveDate, Vec<&Document>> = BTreeMap::new();
    for id in &result.doc_ids {
        if let Some(d) = state.snapshot.documents.get(id) {
            buckets.entry(d.period()).or_default().push(d);
        }
    }
    Ok(Json(
        buckets
            .into_iter()
            .map(|(date, mut docs)| {
                docs.sort_by(|a, b| a.published_at.cmp(&b.published_at).then_with(|| a.id.cmp(&b.id)));
                TimelineBucket {
                    date,
                    documents: docs
                        .into_iter()
                        .map(|d| state.doc_view(d, Some(result.score(&format!("doc:{}", d.id)))))
                        .collect(),
                }
            })
            .collect(),
    ))
}

async fn neighborhood_handler(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<NeighborhoodResponse>, ApiError> {
    let not_found = || ApiError::NotFound(format!("unknown node `{id}`"));
    let node_id: NodeId = id.parse().map_err(|_| not_found())?;
    let sub = state.snapshot.graph.neighborhood(&[node_id]).map_err(|_| not_found())?;
    Ok(Json(NeighborhoodResponse {
        nodes: sub.nodes.iter().map(|n| node_view(n, 0.0)).collect(),
        edges: sub.edges.iter().map(|e| edge_view(e, 0.0)).collect(),
    }))
}

async fn fallback() -> ApiError {
    ApiError::NotFound("no such endpoint".into())
}

pub fn router(state: Arc<AppState>, cors_origin: &str) -> Router {
    let cors = match HeaderValue::from_str(cors_origin) {
        Ok(origin) if cors_origin != "*" => CorsLayer::new().allow_origin(AllowOrigin::exact(origin)),
        _ => CorsLayer::new().allow_origin(AllowOrigin::any()),
    }
    .allow_methods([Method::GET])
    .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/api/search", get(search_handler))
        .route("/api/timeline", get(timeline_handler))
        .route("/api/edges/{id}/documents", get(edge_documents_handler))
        .route("/api/nodes/{id}/neighborhood", get(neighborhood_handler))
        .fallback(fallback)
        .layer(cors)
        .with_state(state)
}
