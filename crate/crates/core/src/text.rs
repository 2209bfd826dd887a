//! Tokenization, stop-word removal, lemmatization and the English gate.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::ingest::Document;

/// Lowercase English stop-words, one per line in the shipped file.
#[derive(Debug, Clone, Default)]
pub struct Stoplist(HashSet<String>);

impl Stoplist {
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
        )
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stoplist {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

/// `form -> lemma` table loaded from a TSV file.
#[derive(Debug, Clone, Default)]
pub struct LemmaLexicon(HashMap<String, String>);

impl LemmaLexicon {
    pub fn parse(text: &str) -> Self {
        let mut map = HashMap::new();
        for line in text.lines() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((form, lemma)) = line.split_once('\t') {
                let (form, lemma) = (form.trim(), lemma.trim());
                if !form.is_empty() && !lemma.is_empty() {
                    map.insert(form.to_lowercase(), lemma.to_lowercase());
                }
            }
        }
        Self(map)
    }

    pub fn get(&self, form: &str) -> Option<&str> {
        self.0.get(form).map(String::as_str)
    }

    pub fn contains(&self, form: &str) -> bool {
        self.0.contains_key(form)
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for LemmaLexicon {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Self(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

/// Strips non-ASCII, splits on non-alphanumeric runs, lowercases.
pub fn tokenize(text: &str) -> Vec<String> {
    let ascii: String = text.chars().filter(char::is_ascii).collect();
    ascii
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_ascii_lowercase)
        .collect()
}

/// Lexicon lookup first, then the suffix rules `ies->y`, `sses->ss`, and
/// dropping a trailing `s` unless the token ends in `ss`, `us` or `is`.
pub fn lemmatize(token: &str, lexicon: &LemmaLexicon) -> String {
    if let Some(lemma) = lexicon.get(token) {
        return lemma.to_string();
    }
    suffix_lemma(token)
}

fn suffix_lemma(token: &str) -> String {
    if let Some(stem) = token.strip_suffix("ies") {
        return format!("{stem}y");
    }
    if let Some(stem) = token.strip_suffix("sses") {
        return format!("{stem}ss");
    }
    if token.len() > 1
        && token.ends_with('s')
        && !(token.ends_with("ss") || token.ends_with("us") || token.ends_with("is"))
    {
        return token[..token.len() - 1].to_string();
    }
    token.to_string()
}

pub fn is_english(tokens: &[String], stoplist: &Stoplist, threshold: f64) -> bool {
    if tokens.is_empty() {
        return false;
    }
    let hits = tokens.iter().filter(|t| stoplist.contains(t)).count();
    hits as f64 / tokens.len() as f64 >= threshold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub raw_token_count: usize,
    pub stopword_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    NonEnglish,
    NoTokens,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prepared {
    Doc(PreparedDoc),
    Rejected(RejectReason),
}

pub fn prepare(doc: &Document, stoplist: &Stoplist, lexicon: &LemmaLexicon, threshold: f64) -> Prepared {
    let raw = tokenize(&format!("{} {}", doc.title, doc.body));
    if !is_english(&raw, stoplist, threshold) {
        // an empty token list is not evidence of either language
        return Prepared::Rejected(if raw.is_empty() {
            RejectReason::NoTokens
        } else {
            RejectReason::NonEnglish
        });
    }
    let stop_count = raw.iter().filter(|t| stoplist.contains(t)).count();
    let tokens: Vec<String> = raw
        .iter()
        .filter(|t| !stoplist.contains(t))
        .map(|t| lemmatize(t, lexicon))
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Prepared::Rejected(RejectReason::NoTokens);
    }
    Prepared::Doc(PreparedDoc {
        doc_id: doc.id.clone(),
        tokens,
        raw_token_count: raw.len(),
        stopword_ratio: stop_count as f64 / raw.len() as f64,
    })
}
