//! Event-centric knowledge graph construction and retrieval.
//!
//! Documents are ingested, clustered into events per day, summarized with
//! 5W1H descriptors, mined for relation triples and merged into an entity
//! graph that is searchable through an inverted index.
pub mod cluster;
pub mod config;
pub mod descriptors;
pub mod eigen;
pub mod embed;
pub mod graph;
pub mod index;
pub mod ingest;
pub mod pca;
pub mod pipeline;
pub mod relation;
pub mod resources;
pub mod segment;
pub mod store;
pub mod text;
