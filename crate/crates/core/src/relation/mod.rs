//! Named entities and relation triples from representative documents.

mod entities;
mod triples;

pub use entities::{date_has_year, date_regex, detect_entities, mention_key, EntityType, NamedEntity};
pub use triples::{dedupe_triples, extract_triples, filter_triples, RelationTriple};

use crate::ingest::Document;
use crate::resources::Resources;

/// Entities plus the filtered, deduplicated triples of one document.
pub fn extract_relations(doc: &Document, res: &Resources) -> (Vec<NamedEntity>, Vec<RelationTriple>) {
    let entities = detect_entities(doc, res);
    let triples = dedupe_triples(filter_triples(extract_triples(doc, &entities, res)));
    (entities, triples)
}
