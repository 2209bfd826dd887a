//! Word lists and gazetteers shipped next to the corpus.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::text::{LemmaLexicon, Stoplist};

pub const STOPWORDS_FILE: &str = "stopwords.txt";
pub const LEMMAS_FILE: &str = "lemmas.tsv";
pub const VERBS_FILE: &str = "verbs.tsv";
pub const PERSONS_FILE: &str = "persons.txt";
pub const ORG_SUFFIXES_FILE: &str = "org_suffixes.txt";
pub const TITLES_FILE: &str = "titles.txt";
pub const GAZETTEER_FILE: &str = "gazetteer.csv";
pub const VECTORS_FILE: &str = "vectors.txt";

/// Every file loaded by [`Resources::load`], plus the word vectors.
pub const ALL_FILES: [&str; 8] = [
    STOPWORDS_FILE,
    LEMMAS_FILE,
    VERBS_FILE,
    PERSONS_FILE,
    ORG_SUFFIXES_FILE,
    TITLES_FILE,
    GAZETTEER_FILE,
    VECTORS_FILE,
];

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GeoRow {
    pub name: String,
    pub country: String,
    pub population: u64,
}

/// Place-name lookup. Rows sharing a name resolve to the most populous one.
#[derive(Debug, Clone, Default)]
pub struct GeoGazetteer {
    best: HashMap<String, GeoRow>,
    max_tokens: usize,
}

impl GeoGazetteer {
    pub fn from_rows(rows: impl IntoIterator<Item = GeoRow>) -> Self {
        let mut best: HashMap<String, GeoRow> = HashMap::new();
        let mut max_tokens = 0;
        for row in rows {
            let key = normalize_name(&row.name);
            max_tokens = max_tokens.max(key.split(' ').count());
            match best.get(&key) {
                Some(existing) if existing.population >= row.population => {}
                _ => {
                    best.insert(key, row);
                }
            }
        }
        Self { best, max_tokens }
    }

    pub fn parse_csv(text: &str) -> Result<Self, csv::Error> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let rows = reader.deserialize().collect::<Result<Vec<GeoRow>, _>>()?;
        Ok(Self::from_rows(rows))
    }

    pub fn lookup(&self, name: &str) -> Option<&GeoRow> {
        self.best.get(&normalize_name(name))
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn is_empty(&self) -> bool {
        self.best.is_empty()
    }
}

/// Lowercased with whitespace collapsed to single spaces.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Default)]
pub struct NameList {
    names: HashSet<String>,
    last_tokens: HashSet<String>,
    max_tokens: usize,
}

impl NameList {
    pub fn parse(text: &str) -> Self {
        Self::from_names(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    pub fn from_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let mut list = Self::default();
        for name in names {
            let key = normalize_name(name);
            let tokens: Vec<&str> = key.split(' ').collect();
            list.max_tokens = list.max_tokens.max(tokens.len());
            if tokens.len() > 1 {
                list.last_tokens.insert(tokens[tokens.len() - 1].to_string());
            }
            list.names.insert(key);
        }
        list
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(&normalize_name(name))
    }

    /// True when `token` is the final token of some multi-token listed name.
    pub fn is_surname(&self, token: &str) -> bool {
        self.last_tokens.contains(&token.to_lowercase())
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }
}

/// Everything the extraction stages need besides word vectors.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub stoplist: Stoplist,
    pub lemmas: LemmaLexicon,
    /// Inflected verb form to lemma.
    pub verbs: LemmaLexicon,
    pub persons: NameList,
    pub org_suffixes: HashSet<String>,
    /// Honorifics and job titles that precede names ("President", "Dr").
    pub titles: HashSet<String>,
    pub geo: GeoGazetteer,
}

fn read(dir: &Path, name: &str) -> Result<String, ResourceError> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|source| ResourceError::Io { path, source })
}

fn word_set(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

impl Resources {
    pub fn load(dir: &Path) -> Result<Self, ResourceError> {
        let gazetteer_path = dir.join(GAZETTEER_FILE);
        let geo = GeoGazetteer::parse_csv(&read(dir, GAZETTEER_FILE)?).map_err(|source| ResourceError::Csv {
            path: gazetteer_path,
            source,
        })?;
        Ok(Self {
            stoplist: Stoplist::parse(&read(dir, STOPWORDS_FILE)?),
            lemmas: LemmaLexicon::parse(&read(dir, LEMMAS_FILE)?),
            verbs: LemmaLexicon::parse(&read(dir, VERBS_FILE)?),
            persons: NameList::parse(&read(dir, PERSONS_FILE)?),
            org_suffixes: word_set(&read(dir, ORG_SUFFIXES_FILE)?),
            titles: word_set(&read(dir, TITLES_FILE)?),
            geo,
        })
    }

    pub fn is_org_suffix(&self, token: &str) -> bool {
        self.org_suffixes.contains(&token.to_lowercase())
    }

    pub fn is_title_word(&self, token: &str) -> bool {
        self.titles.contains(&token.trim_end_matches('.').to_lowercase())
    }

    /// Lexicon verb form, or a non-stop-word ending in `-ed`, `-s` or `-ing`.
    pub fn is_verb_candidate(&self, lower: &str) -> bool {
        if self.verbs.contains(lower) {
            return true;
        }
        !self.stoplist.contains(lower)
            && lower.len() > 2
            && (lower.ends_with("ed") || lower.ends_with("ing") || lower.ends_with('s'))
    }

    /// Verb lexicon lemma, then the general lemmatizer.
    pub fn verb_lemma(&self, lower: &str) -> String {
        match self.verbs.get(lower) {
            Some(lemma) => lemma.to_string(),
            None => crate::text::lemmatize(lower, &self.lemmas),
        }
    }
}
