//! Word-vector tables and mean-of-word-vectors document embeddings.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::PreparedDoc;

#[derive(Debug, Error)]
pub enum VectorsError {
    #[error("line {0}: wrong number of vector components")]
    DimsMismatch(usize),
    #[error("line {0}: malformed vector row")]
    MalformedLine(usize),
    #[error("vector table is empty")]
    EmptyTable,
    #[error("reading vectors: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct WordVectorTable {
    dims: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl WordVectorTable {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    /// Parses the `word v1 ... vd` text format. An optional first line
    /// `count dims` is accepted as a header.
    pub fn parse(text: &str, expected_dims: usize) -> Result<Self, VectorsError> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if i == 0 && expected_dims != 1 && fields.len() == 2 {
                if let (Ok(_), Ok(dims)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                    if dims != expected_dims {
                        return Err(VectorsError::DimsMismatch(line_no));
                    }
                    continue;
                }
            }
            if fields.len() != expected_dims + 1 {
                return Err(VectorsError::DimsMismatch(line_no));
            }
            let vector = fields[1..]
                .iter()
                .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or(VectorsError::MalformedLine(line_no))?;
            entries.insert(fields[0].to_string(), vector);
        }
        if entries.is_empty() {
            return Err(VectorsError::EmptyTable);
        }
        Ok(Self {
            dims: expected_dims,
            entries,
        })
    }
}

pub fn load_vectors(path: &Path, expected_dims: usize) -> Result<WordVectorTable, VectorsError> {
    let text = std::fs::read_to_string(path)?;
    WordVectorTable::parse(&text, expected_dims)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVector {
    pub doc_id: String,
    pub vector: Vec<f64>,
}

/// The document shares no token with the vector table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no token of the document has a word vector")]
pub struct NoVocabularyOverlap;

/// Arithmetic mean of the vectors of in-vocabulary tokens.
///
/// Tokens are summed in sorted order so the result is bit-identical under any
/// permutation of the input tokens.
pub fn embed_document(prepared: &PreparedDoc, table: &WordVectorTable) -> Result<DocVector, NoVocabularyOverlap> {
    let mut known: Vec<(&str, &[f64])> = prepared
        .tokens
        .iter()
        .filter_map(|t| table.get(t).map(|v| (t.as_str(), v)))
        .collect();
    if known.is_empty() {
        return Err(NoVocabularyOverlap);
    }
    known.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let mut sum = vec![0.0; table.dims()];
    for (_, v) in &known {
        for (s, x) in sum.iter_mut().zip(v.iter()) {
            *s += x;
        }
    }
    let n = known.len() as f64;
    Ok(DocVector {
        doc_id: prepared.doc_id.clone(),
        vector: sum.into_iter().map(|s| s / n).collect(),
    })
}
