//! Query execution with tf-idf scoring, and the natural-language entry point.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::query::{has_explicit_syntax, parse_query, QueryAst, QueryError, QueryField};
use super::{DocField, EntityField, InvertedIndex};
use crate::graph::{EdgeId, KnowledgeGraph, NodeId};
use crate::text::{lemmatize, tokenize, LemmaLexicon, Stoplist};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ItemId {
    Node(NodeId),
    Doc(String),
}

impl ItemId {
    pub fn key(&self) -> String {
        match self {
            ItemId::Node(id) => format!("node:{id}"),
            ItemId::Doc(id) => format!("doc:{id}"),
        }
    }
}

/// Ranked ids with scores keyed `node:<id>`, `edge:<id>` and `doc:<id>`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SearchResult {
    pub node_ids: Vec<NodeId>,
    pub edge_ids: Vec<EdgeId>,
    pub doc_ids: Vec<String>,
    pub scores: BTreeMap<String, f64>,
}

impl SearchResult {
    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty() && self.doc_ids.is_empty()
    }

    pub fn score(&self, key: &str) -> f64 {
        self.scores.get(key).copied().unwrap_or(0.0)
    }
}

type Hits = BTreeMap<ItemId, f64>;

fn idf(n: usize, df: usize) -> f64 {
    (1.0 + n as f64 / df as f64).ln()
}

/// Which fields a leaf is matched against.
#[derive(Clone, Copy)]
enum Scope {
    All,
    Only(QueryField),
}

impl Scope {
    fn covers(self, field: QueryField) -> bool {
        match self {
            Scope::All => matches!(field, QueryField::EntityName | QueryField::DocTitle | QueryField::DocBody),
            Scope::Only(f) => f == field,
        }
    }
}

struct Executor<'a> {
    index: &'a InvertedIndex,
    max_edits: usize,
}

impl Executor<'_> {
    fn expand<'v>(&self, vocab: impl Iterator<Item = &'v String>, token: &str, fuzzy: bool) -> Vec<&'v String> {
        vocab
            .filter(|t| {
                if fuzzy {
                    strsim::levenshtein(t, token) <= self.max_edits
                } else {
                    t.as_str() == token
                }
            })
            .collect()
    }

    fn entity_term(&self, field: &EntityField, token: &str, fuzzy: bool, hits: &mut Hits) {
        let matched: Vec<&String> = if fuzzy {
            self.expand(field.postings.keys(), token, true)
        } else {
            field.postings.get_key_value(token).map(|(k, _)| k).into_iter().collect()
        };
        for tok in matched {
            let list = &field.postings[tok];
            let w = idf(field.doc_count, list.len());
            for p in list {
                *hits.entry(ItemId::Node(p.node_id)).or_default() += p.tf as f64 * w;
            }
        }
    }

    fn doc_term(&self, field: &DocField, token: &str, fuzzy: bool, hits: &mut Hits) {
        let matched: Vec<&String> = if fuzzy {
            self.expand(field.postings.keys(), token, true)
        } else {
            field.postings.get_key_value(token).map(|(k, _)| k).into_iter().collect()
        };
        for tok in matched {
            let list = &field.postings[tok];
            let w = idf(field.doc_count, list.len());
            for p in list {
                *hits.entry(ItemId::Doc(p.doc_id.clone())).or_default() += p.tf as f64 * w;
            }
        }
    }

    fn phrase_weight(postings_len: impl Fn(&str) -> Option<usize>, n: usize, tokens: &[String]) -> Option<f64> {
        tokens.iter().map(|t| postings_len(t).map(|df| idf(n, df))).sum()
    }

    fn entity_phrase(&self, field: &EntityField, tokens: &[String], hits: &mut Hits) {
        let Some(w) = Self::phrase_weight(|t| field.postings.get(t).map(Vec::len), field.doc_count, tokens) else {
            return;
        };
        for p in &field.postings[&tokens[0]] {
            let count: usize = field.names[&p.node_id]
                .iter()
                .map(|name| name.windows(tokens.len()).filter(|win| *win == tokens).count())
                .sum();
            if count > 0 {
                *hits.entry(ItemId::Node(p.node_id)).or_default() += count as f64 * w;
            }
        }
    }

    fn doc_phrase(&self, field: &DocField, tokens: &[String], hits: &mut Hits) {
        let Some(w) = Self::phrase_weight(|t| field.postings.get(t).map(Vec::len), field.doc_count, tokens) else {
            return;
        };
        let lists: Vec<BTreeMap<&str, &[u32]>> = tokens
            .iter()
            .map(|t| field.postings[t].iter().map(|p| (p.doc_id.as_str(), p.positions.as_slice())).collect())
            .collect();
        for (doc, first) in &lists[0] {
            let count = first
                .iter()
                .filter(|&&start| {
                    lists[1..].iter().enumerate().all(|(k, list)| {
                        list.get(doc)
                            .is_some_and(|ps| ps.binary_search(&(start + k as u32 + 1)).is_ok())
                    })
                })
                .count();
            if count > 0 {
                *hits.entry(ItemId::Doc(doc.to_string())).or_default() += count as f64 * w;
            }
        }
    }

    fn attribute(&self, field: QueryField, value: &str) -> Hits {
        let meta = &self.index.meta;
        match field {
            QueryField::Type => meta
                .node_types
                .iter()
                .filter(|(_, t)| t.as_str().eq_ignore_ascii_case(value))
                .map(|(id, _)| (ItemId::Node(*id), 0.0))
                .collect(),
            QueryField::Source => meta
                .doc_sources
                .iter()
                .filter(|(_, s)| s.as_str().eq_ignore_ascii_case(value))
                .map(|(id, _)| (ItemId::Doc(id.clone()), 0.0))
                .collect(),
            _ => Hits::new(),
        }
    }

    fn eval(&self, ast: &QueryAst, scope: Scope) -> Hits {
        let index = self.index;
        match ast {
            QueryAst::Term { token, fuzzy } => {
                if let Scope::Only(f @ (QueryField::Type | QueryField::Source)) = scope {
                    return self.attribute(f, token);
                }
                let mut hits = Hits::new();
                if scope.covers(QueryField::EntityName) {
                    self.entity_term(&index.entity_name, token, *fuzzy, &mut hits);
                }
                if scope.covers(QueryField::DocTitle) {
                    self.doc_term(&index.doc_title, token, *fuzzy, &mut hits);
                }
                if scope.covers(QueryField::DocBody) {
                    self.doc_term(&index.doc_body, token, *fuzzy, &mut hits);
                }
                hits
            }
            QueryAst::Phrase { tokens } => {
                let mut hits = Hits::new();
                if tokens.is_empty() {
                    return hits;
                }
                if scope.covers(QueryField::EntityName) {
                    self.entity_phrase(&index.entity_name, tokens, &mut hits);
                }
                if scope.covers(QueryField::DocTitle) {
                    self.doc_phrase(&index.doc_title, tokens, &mut hits);
                }
                if scope.covers(QueryField::DocBody) {
                    self.doc_phrase(&index.doc_body, tokens, &mut hits);
                }
                hits
            }
            QueryAst::Field { field, query } => self.eval(query, Scope::Only(*field)),
            QueryAst::Or { children } => {
                let mut hits = Hits::new();
                for c in children {
                    for (item, s) in self.eval(c, scope) {
                        *hits.entry(item).or_default() += s;
                    }
                }
                hits
            }
            QueryAst::And { children } => {
                let (negative, positive): (Vec<&QueryAst>, Vec<&QueryAst>) =
                    children.iter().partition(|c| matches!(c, QueryAst::Not { .. }));
                let Some((first, rest)) = positive.split_first() else {
                    return Hits::new();
                };
                let mut hits = self.eval(first, scope);
                for c in rest {
                    let other = self.eval(c, scope);
                    hits.retain(|item, _| other.contains_key(item));
                    for (item, s) in hits.iter_mut() {
                        *s += other[item];
                    }
                }
                for c in negative {
                    let QueryAst::Not { query } = c else { unreachable!() };
                    let excluded = self.eval(query, scope);
                    hits.retain(|item, _| !excluded.contains_key(item));
                }
                hits
            }
            // a negation with nothing to subtract from selects nothing
            QueryAst::Not { .. } => Hits::new(),
        }
    }
}

fn ranked<K: Ord + Clone>(scores: &BTreeMap<K, f64>) -> Vec<K> {
    let mut items: Vec<(&K, f64)> = scores.iter().map(|(k, s)| (k, *s)).collect();
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    items.into_iter().map(|(k, _)| k.clone()).collect()
}

fn assemble(index: &InvertedIndex, hits: &Hits) -> SearchResult {
    let mut nodes: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut docs: BTreeMap<String, f64> = BTreeMap::new();
    for (item, s) in hits {
        match item {
            ItemId::Node(id) => {
                nodes.insert(*id, *s);
            }
            ItemId::Doc(id) => {
                docs.insert(id.clone(), *s);
            }
        }
    }
    let mut edges: BTreeMap<EdgeId, f64> = BTreeMap::new();
    for (node, s) in &nodes {
        for e in index.meta.incident.get(node).into_iter().flatten() {
            *edges.entry(*e).or_default() += s;
        }
    }
    let mut scores = BTreeMap::new();
    scores.extend(nodes.iter().map(|(id, s)| (format!("node:{id}"), *s)));
    scores.extend(edges.iter().map(|(id, s)| (format!("edge:{id}"), *s)));
    scores.extend(docs.iter().map(|(id, s)| (format!("doc:{id}"), *s)));
    SearchResult {
        node_ids: ranked(&nodes),
        edge_ids: ranked(&edges),
        doc_ids: ranked(&docs),
        scores,
    }
}

/// Evaluates a query. Terms without a field match every text field; node
/// hits pull in their incident edges, scored by the sum of matched endpoints.
pub fn execute_query(index: &InvertedIndex, ast: &QueryAst, max_edits: usize) -> SearchResult {
    let hits = Executor { index, max_edits }.eval(ast, Scope::All);
    assemble(index, &hits)
}

/// Keyword deconstruction of free text: stop-words dropped, lemmas joined by OR.
pub fn fallback_query(raw: &str, stoplist: &Stoplist, lemmas: &LemmaLexicon) -> Option<QueryAst> {
    let mut seen = BTreeSet::new();
    let mut terms: Vec<QueryAst> = tokenize(raw)
        .into_iter()
        .filter(|t| !stoplist.contains(t))
        .map(|t| lemmatize(&t, lemmas))
        .filter(|t| seen.insert(t.clone()))
        .map(|t| QueryAst::term(&t))
        .collect();
    match terms.len() {
        0 => None,
        1 => terms.pop(),
        _ => Some(QueryAst::or(terms)),
    }
}

/// Uses the query as written when it parses and is either a single term or
/// uses explicit syntax; otherwise deconstructs it into keywords. Matched
/// nodes are widened to their first-degree neighbourhood.
pub fn nlq_search(
    index: &InvertedIndex,
    graph: &KnowledgeGraph,
    raw: &str,
    stoplist: &Stoplist,
    lemmas: &LemmaLexicon,
    max_edits: usize,
) -> Result<SearchResult, QueryError> {
    if raw.trim().is_empty() {
        return Err(QueryError::EmptyQuery);
    }
    let ast = match parse_query(raw) {
        Ok(ast) if has_explicit_syntax(raw) || matches!(ast, QueryAst::Term { .. }) => Some(ast),
        _ => fallback_query(raw, stoplist, lemmas),
    };
    let Some(ast) = ast else {
        return Ok(SearchResult::default());
    };
    let mut result = execute_query(index, &ast, max_edits);

    let seeds: Vec<NodeId> = result.node_ids.iter().copied().filter(|id| graph.node(*id).is_some()).collect();
    let Ok(sub) = graph.neighborhood(&seeds) else {
        return Ok(result);
    };
    let known_nodes: BTreeSet<NodeId> = result.node_ids.iter().copied().collect();
    let mut extra: Vec<NodeId> = sub.nodes.iter().map(|n| n.node_id).filter(|id| !known_nodes.contains(id)).collect();
    extra.sort_unstable();
    for id in extra {
        result.scores.insert(format!("node:{id}"), 0.0);
        result.node_ids.push(id);
    }
    let known_edges: BTreeSet<EdgeId> = result.edge_ids.iter().copied().collect();
    let mut extra: Vec<EdgeId> = sub.edges.iter().map(|e| e.edge_id).filter(|id| !known_edges.contains(id)).collect();
    extra.sort_unstable();
    for id in extra {
        result.scores.insert(format!("edge:{id}"), 0.0);
        result.edge_ids.push(id);
    }
    Ok(result)
}
