//! Who / what / when / where / why / how descriptors for a representative
//! document, each question keeping its top-scored candidates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::ingest::Document;
use crate::relation::{date_has_year, date_regex, mention_key, EntityType, NamedEntity};
use crate::resources::Resources;
use crate::segment::{segments, words, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Question {
    Who,
    What,
    When,
    Where,
    Why,
    How,
}

impl Question {
    pub const ALL: [Question; 6] = [
        Question::Who,
        Question::What,
        Question::When,
        Question::Where,
        Question::Why,
        Question::How,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub question: Question,
    pub text: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDescriptorSet {
    pub cluster_id: String,
    pub descriptors: BTreeMap<Question, Vec<Descriptor>>,
}

impl EventDescriptorSet {
    pub fn get(&self, q: Question) -> &[Descriptor] {
        self.descriptors.get(&q).map(Vec::as_slice).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub text: String,
    pub score: f64,
    /// Byte offset of the candidate in the analysis text, for tie-breaking.
    pub position: usize,
}

/// Sorts by score descending, then earlier position, and keeps `top_k`.
pub fn rank_candidates(question: Question, mut cands: Vec<Candidate>, top_k: usize) -> Vec<Descriptor> {
    cands.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.position.cmp(&b.position)));
    cands
        .into_iter()
        .take(top_k)
        .map(|c| Descriptor {
            question,
            text: c.text,
            confidence: c.score.clamp(0.0, 1.0),
        })
        .collect()
}

const CAUSAL_CUES: [&[&str]; 5] = [&["because"], &["due", "to"], &["amid"], &["after"], &["as", "a", "result"]];
const MANNER_CUES: [&[&str]; 4] = [&["by"], &["via"], &["through"], &["using"]];
const MAX_PHRASE_WORDS: usize = 10;

pub const FALLBACK_WHEN_CONFIDENCE: f64 = 0.1;

pub fn extract_descriptors(
    cluster_id: &str,
    doc: &Document,
    entities: &[NamedEntity],
    res: &Resources,
    cfg: &PipelineConfig,
) -> EventDescriptorSet {
    let text = doc.analysis_text();
    let segs = segments(doc);
    let k = cfg.top_k_descriptors;

    let mut descriptors = BTreeMap::new();
    let who = entity_candidates(&text, &segs, entities, res, |e, agent| {
        matches!(e.entity_type, EntityType::Person | EntityType::Org) || (e.entity_type == EntityType::Location && agent)
    });
    descriptors.insert(Question::Who, rank_candidates(Question::Who, who, k));
    descriptors.insert(Question::What, rank_candidates(Question::What, what_candidates(&text, &segs, entities, res), k));
    descriptors.insert(Question::When, rank_candidates(Question::When, when_candidates(&text, doc), k));
    let place = entity_candidates(&text, &segs, entities, res, |e, _| e.entity_type == EntityType::Location);
    descriptors.insert(Question::Where, rank_candidates(Question::Where, place, k));
    descriptors.insert(Question::Why, rank_candidates(Question::Why, cue_candidates(&text, &segs, &CAUSAL_CUES, 0.6), k));
    descriptors.insert(Question::How, rank_candidates(Question::How, cue_candidates(&text, &segs, &MANNER_CUES, 0.5), k));

    EventDescriptorSet {
        cluster_id: cluster_id.to_string(),
        descriptors,
    }
}

fn segment_of(segs: &[Segment], offset: usize) -> usize {
    segs.iter()
        .find(|s| s.start <= offset && offset < s.end.max(s.start + 1))
        .map_or(segs.len(), |s| s.index)
}

fn position_weight(segment: usize) -> f64 {
    if segment == 0 {
        1.0
    } else {
        0.35 / segment as f64
    }
}

/// An entity is an agent when it opens its sentence and the next word is a
/// verb candidate ("Singapore confirms ...").
fn is_agent(text: &str, segs: &[Segment], e: &NamedEntity, res: &Resources) -> bool {
    let Some(seg) = segs.iter().find(|s| s.start <= e.start() && e.end() <= s.end) else {
        return false;
    };
    let ws = words(seg.text(text), seg.start);
    let Some(first) = ws.first() else { return false };
    if first.start != e.start() {
        return false;
    }
    ws.iter()
        .find(|w| w.start >= e.end())
        .is_some_and(|w| res.is_verb_candidate(&w.text.to_lowercase()))
}

fn entity_candidates(
    text: &str,
    segs: &[Segment],
    entities: &[NamedEntity],
    res: &Resources,
    accept: impl Fn(&NamedEntity, bool) -> bool,
) -> Vec<Candidate> {
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for e in entities.iter().filter(|e| e.entity_type != EntityType::Date) {
        *freq.entry(mention_key(e)).or_default() += 1;
    }
    let max_freq = freq.values().copied().max().unwrap_or(1) as f64;

    // first accepted mention of each distinct name
    let mut first: BTreeMap<String, &NamedEntity> = BTreeMap::new();
    for e in entities {
        if accept(e, is_agent(text, segs, e, res)) {
            first.entry(mention_key(e)).or_insert(e);
        }
    }
    first
        .into_iter()
        .map(|(key, e)| {
            let earliest = entities
                .iter()
                .filter(|m| mention_key(m) == key)
                .map(NamedEntity::start)
                .min()
                .unwrap_or(e.start());
            let pos = position_weight(segment_of(segs, earliest));
            Candidate {
                text: e.text.clone(),
                score: 0.5 * pos + 0.5 * freq.get(&key).copied().unwrap_or(1) as f64 / max_freq,
                position: e.start(),
            }
        })
        .collect()
}

fn verb_phrase(text: &str, seg: &Segment, entities: &[NamedEntity], res: &Resources) -> Option<(String, usize)> {
    let ws = words(seg.text(text), seg.start);
    let free: Vec<usize> = (0..ws.len())
        .filter(|&i| !entities.iter().any(|e| ws[i].start >= e.start() && ws[i].end <= e.end()))
        .collect();
    let lower = |i: usize| ws[i].text.to_lowercase();
    let start = free
        .iter()
        .copied()
        .find(|&i| res.verbs.contains(&lower(i)))
        .or_else(|| free.iter().copied().find(|&i| res.is_verb_candidate(&lower(i))))?;
    let end = (start + MAX_PHRASE_WORDS).min(ws.len()) - 1;
    Some((text[ws[start].start..ws[end].end].to_string(), ws[start].start))
}

fn what_candidates(text: &str, segs: &[Segment], entities: &[NamedEntity], res: &Resources) -> Vec<Candidate> {
    let title = &segs[0];
    if let Some((phrase, position)) = verb_phrase(text, title, entities, res) {
        return vec![Candidate { text: phrase, score: 0.8, position }];
    }
    segs.get(1)
        .and_then(|s| verb_phrase(text, s, entities, res))
        .map(|(phrase, position)| Candidate { text: phrase, score: 0.6, position })
        .into_iter()
        .collect()
}

fn when_candidates(text: &str, doc: &Document) -> Vec<Candidate> {
    let mut seen = std::collections::HashSet::new();
    let mut out: Vec<Candidate> = date_regex()
        .find_iter(text)
        .filter(|m| seen.insert(m.as_str().to_lowercase()))
        .map(|m| Candidate {
            text: m.as_str().to_string(),
            score: if date_has_year(m.as_str()) { 0.9 } else { 0.6 },
            position: m.start(),
        })
        .collect();
    if out.is_empty() {
        out.push(Candidate {
            text: doc.published_at.format("%Y-%m-%d").to_string(),
            score: FALLBACK_WHEN_CONFIDENCE,
            position: usize::MAX,
        });
    }
    out
}

fn cue_candidates(text: &str, segs: &[Segment], cues: &[&[&str]], base: f64) -> Vec<Candidate> {
    segs.iter()
        .filter(|s| !s.is_title())
        .filter(|s| {
            let lower: Vec<String> = words(s.text(text), 0).iter().map(|w| w.text.to_lowercase()).collect();
            cues.iter().any(|cue| lower.windows(cue.len()).any(|w| w.iter().zip(cue.iter()).all(|(a, b)| a == b)))
        })
        .map(|s| Candidate {
            text: s.text(text).to_string(),
            score: base / s.index as f64,
            position: s.start,
        })
        .collect()
}
