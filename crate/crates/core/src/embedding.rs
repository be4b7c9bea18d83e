//! Word-vector storage and concept similarity.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use dashmap::DashMap;
use serde::Serialize;

use crate::concept::Concept;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EmbeddingLoadReport {
    pub loaded: usize,
    pub wrong_arity: usize,
    pub unparsable: usize,
    pub duplicates: usize,
}

/// Dense word vectors of a single dimensionality, plus a memo of pairwise
/// concept cosines.
#[derive(Debug)]
pub struct EmbeddingStore {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
    memo: DashMap<(String, String), Option<f64>>,
}

impl EmbeddingStore {
    /// Build a store from in-memory vectors. All vectors must share one
    /// non-zero length and tokens must be unique.
    pub fn from_vectors<I, S>(vectors: I) -> Result<EmbeddingStore>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = HashMap::new();
        let mut dim = None;
        for (token, v) in vectors {
            let token = token.into();
            let d = *dim.get_or_insert(v.len());
            if d == 0 || v.len() != d {
                return Err(Error::InvalidConfig(format!(
                    "vector for `{token}` has length {}, expected {d}",
                    v.len()
                )));
            }
            if table.insert(token.clone(), v).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate token `{token}`")));
            }
        }
        match dim {
            Some(dim) => Ok(EmbeddingStore {
                dim,
                table,
                memo: DashMap::new(),
            }),
            None => Err(Error::EmptyInput("embedding table")),
        }
    }

    /// Read a whitespace-separated text vector file (`token v1 .. vd` per
    /// line). The dimensionality comes from the first well-formed line; later
    /// lines of a different arity are skipped and counted.
    pub fn load(path: &Path, vocab_limit: Option<usize>) -> Result<(EmbeddingStore, EmbeddingLoadReport)> {
        let file = File::open(path).map_err(|source| Error::Ingest {
            path: path.to_path_buf(),
            source,
        })?;
        let mut report = EmbeddingLoadReport::default();
        let mut table: HashMap<String, Vec<f64>> = HashMap::new();
        let mut dim: Option<usize> = None;
        for line in BufReader::new(file).lines() {
            if vocab_limit.is_some_and(|limit| report.loaded >= limit) {
                break;
            }
            let line = line.map_err(|source| Error::Ingest {
                path: path.to_path_buf(),
                source,
            })?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let values: Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
            let Ok(values) = values else {
                report.unparsable += 1;
                continue;
            };
            if values.is_empty() {
                report.wrong_arity += 1;
                continue;
            }
            if *dim.get_or_insert(values.len()) != values.len() {
                report.wrong_arity += 1;
                continue;
            }
            if table.contains_key(token) {
                report.duplicates += 1;
                continue;
            }
            table.insert(token.to_string(), values);
            report.loaded += 1;
        }
        match dim {
            Some(dim) if !table.is_empty() => Ok((
                EmbeddingStore {
                    dim,
                    table,
                    memo: DashMap::new(),
                },
                report,
            )),
            _ => Err(Error::EmptyEmbeddings(path.to_path_buf())),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn token(&self, token: &str) -> Option<&[f64]> {
        self.table.get(token).map(Vec::as_slice)
    }

    /// Vector for a concept: the word's own vector, or for multi-word
    /// concepts the mean over the words that have one.
    pub fn concept_vector(&self, concept: &Concept) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        let mut known = 0usize;
        for word in concept.words() {
            if let Some(v) = self.table.get(word) {
                sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
                known += 1;
            }
        }
        if known == 0 {
            return None;
        }
        let n = known as f64;
        sum.iter_mut().for_each(|s| *s /= n);
        Some(sum)
    }

    /// Cosine similarity between two concepts, memoized per unordered pair.
    /// `None` when either side has no vector or a zero-norm vector.
    pub fn cosine(&self, a: &Concept, b: &Concept) -> Option<f64> {
        let key = if a <= b {
            (a.as_str().to_string(), b.as_str().to_string())
        } else {
            (b.as_str().to_string(), a.as_str().to_string())
        };
        if let Some(hit) = self.memo.get(&key) {
            return *hit;
        }
        let value = self.cosine_uncached(a, b);
        self.memo.insert(key, value);
        value
    }

    pub fn cosine_uncached(&self, a: &Concept, b: &Concept) -> Option<f64> {
        let va = self.concept_vector(a)?;
        let vb = self.concept_vector(b)?;
        cosine(&va, &vb)
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    pub fn clear_memo(&self) {
        self.memo.clear();
    }
}

/// Cosine of two equal-length vectors, clamped to [-1, 1]; `None` for a
/// zero-norm input.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}
