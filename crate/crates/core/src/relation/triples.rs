//! Pattern-based subject-relation-object extraction over noun chunks.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::entities::NamedEntity;
use crate::ingest::Document;
use crate::resources::Resources;
use crate::segment::{segments, words, Word};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationTriple {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub doc_id: String,
    pub sentence_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_entity: Option<NamedEntity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_entity: Option<NamedEntity>,
}

const DETERMINERS: [&str; 8] = ["a", "an", "the", "this", "these", "those", "its", "their"];
const AUXILIARIES: [&str; 11] = ["is", "are", "was", "were", "has", "have", "had", "will", "would", "been", "be"];
const ADVERBS: [&str; 10] = ["also", "already", "now", "still", "just", "recently", "later", "soon", "yet", "again"];
const MAX_RELATION_TOKENS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Entity(usize),
    Determiner,
    Function,
    Verb,
    Content,
}

#[derive(Debug)]
struct Chunk {
    /// word index range, end exclusive
    first: usize,
    last: usize,
    entity: Option<usize>,
}

fn is_adverb(lower: &str) -> bool {
    ADVERBS.contains(&lower) || (lower.len() > 4 && lower.ends_with("ly"))
}

/// Emits a triple for each ordered pair of noun chunks in a sentence whose
/// intervening words contain a verb candidate.
pub fn extract_triples(doc: &Document, entities: &[NamedEntity], res: &Resources) -> Vec<RelationTriple> {
    let text = doc.analysis_text();
    let mut out = Vec::new();
    for seg in segments(doc) {
        let ws = words(seg.text(&text), seg.start);
        if ws.len() < 2 {
            continue;
        }
        let lower: Vec<String> = ws.iter().map(|w| w.text.to_lowercase()).collect();
        let classes: Vec<Class> = ws
            .iter()
            .zip(&lower)
            .map(|(w, l)| classify(w, l, entities, res))
            .collect();
        // a chunk may not reach across punctuation
        let joined = |a: &Word, b: &Word| text[a.end..b.start].chars().all(char::is_whitespace);

        let chunks = noun_chunks(&ws, &classes, &joined);
        for (i, subj) in chunks.iter().enumerate() {
            for obj in &chunks[i + 1..] {
                let between = subj.last..obj.first;
                if between.is_empty() {
                    continue;
                }
                if (subj.last - 1..obj.first).any(|k| !joined(&ws[k], &ws[k + 1])) {
                    continue;
                }
                let has_verb = between.clone().any(|k| {
                    !matches!(classes[k], Class::Entity(_)) && res.is_verb_candidate(&lower[k])
                });
                if !has_verb {
                    continue;
                }
                let Some(relation) = relation_phrase(&lower[between], res) else {
                    continue;
                };
                out.push(RelationTriple {
                    subject: chunk_text(&text, &ws, subj),
                    relation,
                    object: chunk_text(&text, &ws, obj),
                    doc_id: doc.id.clone(),
                    sentence_index: seg.index,
                    subject_entity: subj.entity.map(|e| entities[e].clone()),
                    object_entity: obj.entity.map(|e| entities[e].clone()),
                });
            }
        }
    }
    out
}

fn classify(w: &Word, lower: &str, entities: &[NamedEntity], res: &Resources) -> Class {
    if let Some(i) = entities.iter().position(|e| w.start >= e.start() && w.end <= e.end()) {
        return Class::Entity(i);
    }
    if DETERMINERS.contains(&lower) {
        Class::Determiner
    } else if res.stoplist.contains(lower) {
        Class::Function
    } else if res.verbs.contains(lower) || (lower.len() > 4 && (lower.ends_with("ed") || lower.ends_with("ing"))) {
        Class::Verb
    } else {
        Class::Content
    }
}

fn noun_chunks(ws: &[Word], classes: &[Class], joined: &dyn Fn(&Word, &Word) -> bool) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    let mut i = 0;
    while i < ws.len() {
        match classes[i] {
            Class::Entity(e) => {
                let mut j = i + 1;
                while j < ws.len() && classes[j] == Class::Entity(e) {
                    j += 1;
                }
                chunks.push(Chunk { first: i, last: j, entity: Some(e) });
                i = j;
            }
            Class::Determiner | Class::Content => {
                let mut j = i;
                while j < ws.len() && classes[j] == Class::Determiner && (j == i || joined(&ws[j - 1], &ws[j])) {
                    j += 1;
                }
                let det_end = j;
                while j < ws.len() && classes[j] == Class::Content && (j == i || joined(&ws[j - 1], &ws[j])) {
                    j += 1;
                }
                if j > det_end {
                    chunks.push(Chunk { first: i, last: j, entity: None });
                    i = j;
                } else {
                    i = det_end.max(i + 1);
                }
            }
            Class::Function | Class::Verb => i += 1,
        }
    }
    chunks
}

fn chunk_text(text: &str, ws: &[Word], c: &Chunk) -> String {
    text[ws[c.first].start..ws[c.last - 1].end].to_string()
}

fn relation_phrase(span: &[String], res: &Resources) -> Option<String> {
    let mut start = 0;
    while start < span.len() && (AUXILIARIES.contains(&span[start].as_str()) || is_adverb(&span[start])) {
        start += 1;
    }
    let mut kept: Vec<&str> = span[start..]
        .iter()
        .map(String::as_str)
        .filter(|w| !is_adverb(w))
        .collect();
    while kept.last().is_some_and(|w| DETERMINERS.contains(w)) {
        kept.pop();
    }
    if kept.is_empty() || kept.len() > MAX_RELATION_TOKENS {
        return None;
    }
    Some(kept.iter().map(|w| res.verb_lemma(w)).collect::<Vec<_>>().join(" "))
}

/// Keeps triples whose subject or object is a person, organization or location.
pub fn filter_triples(triples: Vec<RelationTriple>) -> Vec<RelationTriple> {
    triples
        .into_iter()
        .filter(|t| {
            [&t.subject_entity, &t.object_entity]
                .into_iter()
                .flatten()
                .any(|e| e.entity_type.is_essential())
        })
        .collect()
}

/// Collapses triples equal under (doc, lowercased subject, relation,
/// lowercased object) to the occurrence with the lowest sentence index.
pub fn dedupe_triples(triples: Vec<RelationTriple>) -> Vec<RelationTriple> {
    let mut slot: HashMap<(String, String, String, String), usize> = HashMap::new();
    let mut out: Vec<RelationTriple> = Vec::with_capacity(triples.len());
    for t in triples {
        let key = (
            t.doc_id.clone(),
            t.subject.to_lowercase(),
            t.relation.clone(),
            t.object.to_lowercase(),
        );
        match slot.get(&key) {
            Some(&i) => {
                if t.sentence_index < out[i].sentence_index {
                    out[i] = t;
                }
            }
            None => {
                slot.insert(key, out.len());
                out.push(t);
            }
        }
    }
    out
}
