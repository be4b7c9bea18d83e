//! On-disk cache of filtered graphs keyed by input digests and filter
//! settings.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use csforge::embedding::{EmbeddingLoadReport, EmbeddingStore};
use csforge::kg_store::{filter_graph, load_assertions, FilterReport, GraphSnapshot, LoadReport};
use csforge::manifest::{bytes_digest, file_digest};
use csforge::ConceptGraph;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CachedGraph {
    pub key: String,
    pub load: LoadReport,
    pub filter: FilterReport,
    pub snapshot: GraphSnapshot,
}

pub struct FilteredGraph {
    pub graph: ConceptGraph,
    pub load: LoadReport,
    pub filter: FilterReport,
    /// Loaded only when the cache missed or the caller asked for it.
    pub store: Option<EmbeddingStore>,
    pub cache_hit: bool,
    pub cache_file: Option<PathBuf>,
}

#[derive(Serialize)]
struct KeyParts<'a> {
    graph: &'a str,
    embeddings: &'a str,
    lang: &'a str,
    vocab_limit: Option<usize>,
    min_weight: f64,
    min_sim: f64,
}

pub fn cache_key(cfg: &RunConfig, graph: &Path, embeddings: &Path) -> Result<String> {
    let parts = KeyParts {
        graph: &file_digest(graph)?,
        embeddings: &file_digest(embeddings)?,
        lang: &cfg.lang,
        vocab_limit: cfg.vocab_limit,
        min_weight: cfg.filter.min_weight,
        min_sim: cfg.filter.min_sim,
    };
    Ok(bytes_digest(serde_json::to_string(&parts)?.as_bytes()))
}

fn read_cached(path: &Path, key: &str) -> Option<CachedGraph> {
    let text = std::fs::read_to_string(path).ok()?;
    match serde_json::from_str::<CachedGraph>(&text) {
        Ok(c) if c.key == key => Some(c),
        Ok(_) => None,
        Err(e) => {
            warn!("ignoring unreadable cache file {}: {e}", path.display());
            None
        }
    }
}

pub fn load_embeddings(cfg: &RunConfig, path: &Path) -> Result<(EmbeddingStore, EmbeddingLoadReport)> {
    let (store, report) = EmbeddingStore::load(path, cfg.vocab_limit)?;
    info!(
        "embeddings: {} vectors of dim {} ({} wrong arity, {} unparsable, {} duplicates)",
        report.loaded,
        store.dim(),
        report.wrong_arity,
        report.unparsable,
        report.duplicates
    );
    Ok((store, report))
}

/// Filtered graph for (`graph`, `embeddings`), from the cache when possible.
/// With `need_store` the embeddings are loaded even on a cache hit.
pub fn filtered_graph(cfg: &RunConfig, graph: &Path, embeddings: &Path, cache_dir: Option<&Path>, need_store: bool) -> Result<FilteredGraph> {
    let key = cache_key(cfg, graph, embeddings)?;
    let cache_file = cache_dir.map(|d| d.join(format!("graph-{}.json", &key[..16])));
    if let Some(cached) = cache_file.as_deref().and_then(|p| read_cached(p, &key)) {
        info!("graph cache hit: {}", cache_file.as_ref().unwrap().display());
        let store = if need_store { Some(load_embeddings(cfg, embeddings)?.0) } else { None };
        return Ok(FilteredGraph {
            graph: ConceptGraph::from_snapshot(cached.snapshot)?,
            load: cached.load,
            filter: cached.filter,
            store,
            cache_hit: true,
            cache_file,
        });
    }
    let (raw, load) = load_assertions(graph, &cfg.lang)?;
    info!(
        "graph: {} of {} rows kept ({} unmapped relation, {} other language, {} malformed)",
        load.kept, load.rows, load.unmapped_relation, load.language_mismatch, load.malformed
    );
    let (store, _) = load_embeddings(cfg, embeddings)?;
    let (filtered, filter) = filter_graph(&raw, &store, cfg.filter.min_weight, cfg.filter.min_sim);
    info!(
        "filter: {} of {} kept ({} below weight, {} without embedding, {} below similarity)",
        filter.kept, filter.input, filter.below_weight, filter.missing_embedding, filter.below_similarity
    );
    if let Some(path) = &cache_file {
        let entry = CachedGraph {
            key,
            load: load.clone(),
            filter: filter.clone(),
            snapshot: filtered.snapshot(),
        };
        std::fs::create_dir_all(path.parent().unwrap())
            .with_context(|| format!("cannot create cache directory {}", path.parent().unwrap().display()))?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec(&entry)?)?;
        std::fs::rename(&tmp, path)?;
    }
    Ok(FilteredGraph {
        graph: filtered,
        load,
        filter,
        store: Some(store),
        cache_hit: false,
        cache_file,
    })
}
