#![allow(dead_code)]

pub mod extract_oracle;

use std::path::PathBuf;

use csforge::embedding::EmbeddingStore;
use csforge::kg_store::{filter_graph, load_assertions, ConceptGraph};
use csforge::Concept;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Load a compact graph fixture and its vectors, filtered with the default
/// thresholds.
pub fn filtered(graph: &str, vectors: &str) -> (ConceptGraph, EmbeddingStore) {
    let (raw, _) = load_assertions(&fixture(graph), "en").unwrap();
    let (store, _) = EmbeddingStore::load(&fixture(vectors), None).unwrap();
    let (g, report) = filter_graph(&raw, &store, 1.0, 0.0);
    assert_eq!(report.kept, raw.assertion_count(), "fixture edges must survive filtering");
    (g, store)
}

pub fn c(s: &str) -> Concept {
    Concept::new(s).unwrap()
}
