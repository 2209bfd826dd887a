//! Gazetteer and pattern based named-entity detection.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::ingest::Document;
use crate::resources::{normalize_name, Resources};
use crate::segment::{segments, words, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Person,
    Org,
    Location,
    Date,
    Misc,
}

impl EntityType {
    /// Types that make a triple worth keeping in the graph.
    pub fn is_essential(self) -> bool {
        matches!(self, EntityType::Person | EntityType::Org | EntityType::Location)
    }
}

/// An entity mention. `char_span` holds byte offsets into
/// [`Document::analysis_text`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedEntity {
    pub text: String,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
    pub char_span: (usize, usize),
}

impl NamedEntity {
    pub fn start(&self) -> usize {
        self.char_span.0
    }

    pub fn end(&self) -> usize {
        self.char_span.1
    }
}

const MONTHS: &str = "January|February|March|April|May|June|July|August|September|October|November|December|Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sept|Sep|Oct|Nov|Dec";

/// Month-name dates (`January 23, 2020`, `Jan. 23`), `23 January 2020` and
/// ISO `2020-01-23`.
pub fn date_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"\b(?:\d{{1,2}}\s+(?:{m})\.?\s+\d{{4}}|(?:{m})\.?\s+\d{{1,2}}(?:st|nd|rd|th)?(?:,?\s+\d{{4}})?|\d{{4}}-\d{{2}}-\d{{2}})\b",
            m = MONTHS
        ))
        .expect("date pattern compiles")
    })
}

/// True when a matched date expression carries a year.
pub fn date_has_year(text: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d{4}").expect("year pattern compiles")).is_match(text)
}

fn is_capitalized(w: &str) -> bool {
    w.chars().next().is_some_and(char::is_uppercase)
}

fn is_acronym(w: &str) -> bool {
    (2..=5).contains(&w.len()) && w.chars().all(|c| c.is_ascii_uppercase())
}

/// Detects entities in the title and body. Spans never overlap.
pub fn detect_entities(doc: &Document, res: &Resources) -> Vec<NamedEntity> {
    let text = doc.analysis_text();
    let mut found: Vec<NamedEntity> = date_regex()
        .find_iter(&text)
        .map(|m| NamedEntity {
            text: m.as_str().to_string(),
            entity_type: EntityType::Date,
            char_span: (m.start(), m.end()),
        })
        .collect();

    for seg in segments(doc) {
        let seg_words = words(seg.text(&text), seg.start);
        let dated = |w: &Word| found.iter().any(|e| e.entity_type == EntityType::Date && w.start < e.end() && e.start() < w.end);
        let mut runs: Vec<Vec<Word>> = Vec::new();
        let mut current: Vec<Word> = Vec::new();
        for (i, w) in seg_words.iter().enumerate() {
            let joins = current
                .last()
                .is_some_and(|prev| &text[prev.end..w.start] == " ");
            if is_capitalized(w.text) && !dated(w) {
                if !joins {
                    flush(&mut runs, &mut current);
                }
                current.push(*w);
            } else if w.text == "of"
                && joins
                && seg_words
                    .get(i + 1)
                    .is_some_and(|n| is_capitalized(n.text) && &text[w.end..n.start] == " " && !dated(n))
            {
                current.push(*w);
            } else {
                flush(&mut runs, &mut current);
            }
        }
        flush(&mut runs, &mut current);

        let first_start = seg_words.first().map(|w| w.start);
        for run in runs {
            let initial = first_start == Some(run[0].start);
            resolve_run(&text, &run, initial, res, &mut found);
        }
    }
    remove_overlaps(found)
}

fn flush<'a>(runs: &mut Vec<Vec<Word<'a>>>, current: &mut Vec<Word<'a>>) {
    if !current.is_empty() {
        runs.push(std::mem::take(current));
    }
}

fn span_text<'a>(text: &'a str, words: &[Word]) -> &'a str {
    &text[words[0].start..words[words.len() - 1].end]
}

fn push(out: &mut Vec<NamedEntity>, text: &str, words: &[Word], entity_type: EntityType) {
    out.push(NamedEntity {
        text: span_text(text, words).to_string(),
        entity_type,
        char_span: (words[0].start, words[words.len() - 1].end),
    });
}

fn trim_connectors<'a, 'b>(mut run: &'b [Word<'a>]) -> &'b [Word<'a>] {
    while run.first().is_some_and(|w| w.text == "of") {
        run = &run[1..];
    }
    while run.last().is_some_and(|w| w.text == "of") {
        run = &run[..run.len() - 1];
    }
    run
}

fn resolve_run(text: &str, run: &[Word], initial: bool, res: &Resources, out: &mut Vec<NamedEntity>) {
    let mut run = run;
    let mut initial = initial;
    // a sentence-initial function word ("The", "In") is capitalized by position only
    if initial && !is_acronym(run[0].text) && res.stoplist.contains(&run[0].text.to_lowercase()) {
        run = &run[1..];
        initial = false;
    }
    while run.first().is_some_and(|w| res.is_title_word(w.text)) {
        run = &run[1..];
        initial = false;
    }
    let run = trim_connectors(run);
    if run.is_empty() {
        return;
    }

    let whole = span_text(text, run);
    if res.geo.lookup(whole).is_some() {
        return push(out, text, run, EntityType::Location);
    }
    if run.iter().any(|w| res.is_org_suffix(w.text)) {
        return push(out, text, run, EntityType::Org);
    }
    if res.persons.contains(whole) {
        return push(out, text, run, EntityType::Person);
    }

    // longest gazetteer sub-match, left to right; leftovers fall to the rules
    let max_len = res.geo.max_tokens().max(res.persons.max_tokens()).max(1);
    let mut rest_start = 0;
    let mut i = 0;
    while i < run.len() {
        let mut matched = None;
        for len in (1..=max_len.min(run.len() - i)).rev() {
            let window = &run[i..i + len];
            if window[0].text == "of" || window[len - 1].text == "of" {
                continue;
            }
            let name = span_text(text, window);
            if res.geo.lookup(name).is_some() {
                matched = Some((len, EntityType::Location));
                break;
            }
            if res.persons.contains(name) || (len == 1 && res.persons.is_surname(name)) {
                matched = Some((len, EntityType::Person));
                break;
            }
        }
        match matched {
            Some((len, kind)) => {
                resolve_by_rules(text, &run[rest_start..i], initial && rest_start == 0, res, out);
                push(out, text, &run[i..i + len], kind);
                i += len;
                rest_start = i;
            }
            None => i += 1,
        }
    }
    resolve_by_rules(text, &run[rest_start..], initial && rest_start == 0, res, out);
}

fn resolve_by_rules(text: &str, run: &[Word], initial: bool, res: &Resources, out: &mut Vec<NamedEntity>) {
    let run = trim_connectors(run);
    if run.is_empty() || run.iter().all(|w| res.is_title_word(w.text)) {
        return;
    }
    if run.iter().any(|w| res.is_org_suffix(w.text)) {
        return push(out, text, run, EntityType::Org);
    }
    if run.len() == 1 {
        let w = run[0].text;
        if is_acronym(w) {
            return push(out, text, run, EntityType::Org);
        }
        if res.persons.is_surname(w) {
            return push(out, text, run, EntityType::Person);
        }
        if initial {
            return;
        }
        return push(out, text, run, EntityType::Misc);
    }
    if (2..=3).contains(&run.len()) && run.iter().all(|w| w.text != "of") {
        return push(out, text, run, EntityType::Person);
    }
    push(out, text, run, EntityType::Misc)
}

/// Keeps a maximal non-overlapping subset: longer spans first, earlier start on ties.
fn remove_overlaps(mut found: Vec<NamedEntity>) -> Vec<NamedEntity> {
    found.sort_by(|a, b| {
        (b.end() - b.start())
            .cmp(&(a.end() - a.start()))
            .then(a.start().cmp(&b.start()))
    });
    let mut kept: Vec<NamedEntity> = Vec::with_capacity(found.len());
    for e in found {
        if kept.iter().all(|k| e.end() <= k.start() || k.end() <= e.start()) {
            kept.push(e);
        }
    }
    kept.sort_by_key(NamedEntity::start);
    kept
}

/// Canonical lowercase key for grouping mentions.
pub fn mention_key(e: &NamedEntity) -> String {
    normalize_name(&e.text)
}
