//! Word tokens with byte spans and sentence segmentation over a document's
//! analysis text (title, blank line, body).

use crate::ingest::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Word<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

/// Alphanumeric runs; a single `-` between two alphanumerics stays inside
/// the word (`COVID-19`).
pub fn words(text: &str, offset: usize) -> Vec<Word<'_>> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if !bytes[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        let mut j = i;
        loop {
            while j < bytes.len() && bytes[j].1.is_alphanumeric() {
                j += 1;
            }
            if j + 1 < bytes.len() && bytes[j].1 == '-' && bytes[j + 1].1.is_alphanumeric() {
                j += 1;
                continue;
            }
            break;
        }
        let s = bytes[start].0;
        let e = if j < bytes.len() { bytes[j].0 } else { text.len() };
        out.push(Word {
            text: &text[s..e],
            start: offset + s,
            end: offset + e,
        });
        i = j;
    }
    out
}

/// A title or body sentence. Index 0 is the title; body sentences follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn is_title(&self) -> bool {
        self.index == 0
    }

    pub fn text<'a>(&self, analysis: &'a str) -> &'a str {
        &analysis[self.start..self.end]
    }
}

/// Splits on `.`, `?` or `!` followed by whitespace and an uppercase letter.
/// Returned spans are trimmed and relative to `text`.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '?' | '!') {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            if j > i + 1 && j < chars.len() && chars[j].1.is_uppercase() {
                spans.push((start, pos + c.len_utf8()));
                start = chars[j].0;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    spans.push((start, text.len()));
    spans
        .into_iter()
        .filter_map(|(s, e)| {
            let slice = &text[s..e];
            let lead = slice.len() - slice.trim_start().len();
            let trimmed = slice.trim();
            (!trimmed.is_empty()).then(|| (s + lead, s + lead + trimmed.len()))
        })
        .collect()
}

/// Title segment (always present, possibly empty) followed by body sentences.
pub fn segments(doc: &Document) -> Vec<Segment> {
    let mut out = vec![Segment {
        index: 0,
        start: 0,
        end: doc.title.len(),
    }];
    let offset = doc.body_offset();
    for (i, (s, e)) in split_sentences(&doc.body).into_iter().enumerate() {
        out.push(Segment {
            index: i + 1,
            start: offset + s,
            end: offset + e,
        });
    }
    out
}
