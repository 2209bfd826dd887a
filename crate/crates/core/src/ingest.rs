//! Document loading: JSONL corpus lines, RSS 2.0 feeds and exact-duplicate removal.

use std::collections::HashMap;
use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceType {
    News,
    Social,
}

impl SourceType {
    pub const ALL: [SourceType; 2] = [SourceType::News, SourceType::Social];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceType::News => "news",
            SourceType::Social => "social",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "news" => Some(SourceType::News),
            "social" => Some(SourceType::Social),
            _ => None,
        }
    }
}

impl fmt::Display for SourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One ingested news article or social post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source_type: SourceType,
    pub source_name: String,
    #[serde(default)]
    pub url: String,
    pub title: String,
    pub body: String,
    pub published_at: DateTime<Utc>,
    pub fetched_at: DateTime<Utc>,
}

impl Document {
    /// The UTC calendar day the document was published on.
    pub fn period(&self) -> NaiveDate {
        self.published_at.date_naive()
    }

    /// Title and body joined by a blank line. Entity spans index into this text.
    pub fn analysis_text(&self) -> String {
        format!("{}{}{}", self.title, TITLE_SEPARATOR, self.body)
    }

    /// Byte offset where the body starts inside [`Document::analysis_text`].
    pub fn body_offset(&self) -> usize {
        self.title.len() + TITLE_SEPARATOR.len()
    }
}

pub const TITLE_SEPARATOR: &str = "\n\n";

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("invalid value for field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("document body is empty")]
    EmptyBody,
    #[error("published_at is later than fetched_at")]
    PublishedAfterFetch,
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("feed contains no items")]
    EmptyFeed,
    #[error("feed item {0} has no usable text")]
    EmptyItem(usize),
}

fn required_str<'a>(obj: &'a Map<String, Value>, name: &'static str) -> Result<&'a str, IngestError> {
    match obj.get(name) {
        None | Some(Value::Null) => Err(IngestError::MissingField(name)),
        Some(Value::String(s)) => Ok(s),
        Some(other) => Err(IngestError::InvalidField {
            field: name,
            reason: format!("expected string, got {other}"),
        }),
    }
}

fn timestamp(obj: &Map<String, Value>, name: &'static str) -> Result<DateTime<Utc>, IngestError> {
    let raw = required_str(obj, name)?;
    DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| IngestError::InvalidField {
            field: name,
            reason: e.to_string(),
        })
}

/// Parses and validates one JSONL corpus line. Unknown fields are ignored.
pub fn parse_corpus_line(line: &str) -> Result<Document, IngestError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| IngestError::MalformedJson(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| IngestError::MalformedJson("expected a JSON object".into()))?;

    let id = required_str(obj, "id")?;
    if id.trim().is_empty() {
        return Err(IngestError::InvalidField {
            field: "id",
            reason: "empty".into(),
        });
    }
    let source_raw = required_str(obj, "source_type")?;
    let source_type = SourceType::parse(source_raw).ok_or_else(|| IngestError::InvalidField {
        field: "source_type",
        reason: format!("unknown source type `{source_raw}`"),
    })?;
    let source_name = required_str(obj, "source_name")?;
    let url = match obj.get("url") {
        None | Some(Value::Null) => "",
        Some(_) => required_str(obj, "url")?,
    };
    let title = required_str(obj, "title")?;
    let body = required_str(obj, "body")?;
    let published_at = timestamp(obj, "published_at")?;
    let fetched_at = timestamp(obj, "fetched_at")?;

    let doc = Document {
        id: id.to_string(),
        source_type,
        source_name: source_name.to_string(),
        url: url.to_string(),
        title: title.to_string(),
        body: body.to_string(),
        published_at,
        fetched_at,
    };
    validate(&doc)?;
    Ok(doc)
}

pub fn validate(doc: &Document) -> Result<(), IngestError> {
    if doc.body.trim().is_empty() {
        return Err(IngestError::EmptyBody);
    }
    if doc.published_at > doc.fetched_at {
        return Err(IngestError::PublishedAfterFetch);
    }
    Ok(())
}

fn rss_item_id(source_name: &str, link: &str, title: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(source_name.as_bytes());
    hasher.update([0x1f]);
    hasher.update(link.as_bytes());
    hasher.update([0x1f]);
    hasher.update(title.as_bytes());
    let digest = hasher.finalize();
    format!("rss-{}", hex::encode(&digest[..12]))
}

fn strip_markup(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => {
                in_tag = false;
                out.push(' ');
            }
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Converts an RSS 2.0 feed into news documents, one per `<item>`.
pub fn fetch_rss(feed_xml: &str, source_name: &str, now: DateTime<Utc>) -> Result<Vec<Document>, IngestError> {
    let xml = roxmltree::Document::parse(feed_xml).map_err(|e| IngestError::MalformedXml(e.to_string()))?;
    let items: Vec<_> = xml
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "item")
        .collect();
    if items.is_empty() {
        return Err(IngestError::EmptyFeed);
    }

    let child_text = |item: roxmltree::Node, name: &str| -> String {
        item.children()
            .find(|c| c.is_element() && c.tag_name().name() == name)
            .map(|c| c.text().unwrap_or_default().trim().to_string())
            .unwrap_or_default()
    };

    let mut docs = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let title = strip_markup(&child_text(item, "title"));
        let link = child_text(item, "link");
        let description = strip_markup(&child_text(item, "description"));
        let published_at = DateTime::parse_from_rfc2822(&child_text(item, "pubDate"))
            .map(|t| t.with_timezone(&Utc))
            .unwrap_or(now)
            .min(now);
        let body = [&description, &title, &link]
            .into_iter()
            .find(|s| !s.trim().is_empty())
            .cloned()
            .ok_or(IngestError::EmptyItem(i))?;
        docs.push(Document {
            id: rss_item_id(source_name, &link, &title),
            source_type: SourceType::News,
            source_name: source_name.to_string(),
            url: link,
            title,
            body,
            published_at,
            fetched_at: now,
        });
    }
    Ok(docs)
}

fn normalized_body_hash(body: &str) -> [u8; 32] {
    let normalized = body
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ");
    Sha256::digest(normalized.as_bytes()).into()
}

/// Drops documents whose normalized body duplicates another's. Within each
/// duplicate group the earliest-published document survives (first position
/// on ties); survivors keep their input order.
pub fn dedupe_corpus(docs: Vec<Document>) -> Vec<Document> {
    let mut winner: HashMap<[u8; 32], usize> = HashMap::new();
    let hashes: Vec<_> = docs.iter().map(|d| normalized_body_hash(&d.body)).collect();
    for (i, hash) in hashes.iter().enumerate() {
        winner
            .entry(*hash)
            .and_modify(|w| {
                if docs[i].published_at < docs[*w].published_at {
                    *w = i;
                }
            })
            .or_insert(i);
    }
    docs.into_iter()
        .enumerate()
        .filter(|(i, _)| winner[&hashes[*i]] == *i)
        .map(|(_, d)| d)
        .collect()
}
