//! Loading, filtering and indexing of a ConceptNet-style assertion graph.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::concept::Concept;
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::relation::Relation;

pub type ConceptId = u32;
pub type AssertionId = u32;

/// A directed, weighted edge as stored in the dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub head: ConceptId,
    pub relation: Relation,
    pub tail: ConceptId,
    /// Graph-native strength from the dump.
    pub weight: f64,
    /// Embedding cosine between head and tail; populated by [`filter_graph`].
    pub sim_weight: Option<f64>,
}

impl Assertion {
    /// The endpoint opposite `from`.
    pub fn other(&self, from: ConceptId) -> ConceptId {
        if self.head == from {
            self.tail
        } else {
            self.head
        }
    }
}

/// One entry of a concept's neighbor list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Adjacent {
    pub neighbor: ConceptId,
    pub assertion: AssertionId,
    /// True when the stored assertion points away from the owning concept.
    pub forward: bool,
}

/// Result of a bounded breadth-first distance query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HopDistance {
    Zero,
    One,
    Two,
    Beyond,
}

/// Whether an assertion must match the queried orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionMode {
    #[default]
    Strict,
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatchReport {
    pub pair_exists: bool,
    pub assertion_exists: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows: usize,
    pub kept: usize,
    pub unmapped_relation: usize,
    pub language_mismatch: usize,
    pub malformed: usize,
    pub invalid_concept: usize,
    pub self_loop: usize,
    /// 1-based line numbers of the first malformed rows.
    pub malformed_lines: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub below_weight: usize,
    pub missing_embedding: usize,
    pub below_similarity: usize,
    pub min_weight: f64,
    pub min_sim: f64,
}

const MALFORMED_LINES_KEPT: usize = 20;

/// Adjacency-indexed assertion store. Traversal is undirected; each
/// neighbor entry remembers the stored orientation. Neighbor lists follow
/// assertion insertion order.
#[derive(Debug, Clone, Default)]
pub struct ConceptGraph {
    concepts: Vec<Concept>,
    index: HashMap<Concept, ConceptId>,
    assertions: Vec<Assertion>,
    adjacency: Vec<Vec<Adjacent>>,
    pairs: HashMap<(ConceptId, ConceptId), Vec<AssertionId>>,
}

/// Serializable form of a graph: the rest is rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSnapshot {
    pub concepts: Vec<Concept>,
    pub assertions: Vec<Assertion>,
}

fn pair_key(a: ConceptId, b: ConceptId) -> (ConceptId, ConceptId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl ConceptGraph {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, c: Concept) -> ConceptId {
        if let Some(&id) = self.index.get(&c) {
            return id;
        }
        let id = self.concepts.len() as ConceptId;
        self.concepts.push(c.clone());
        self.index.insert(c, id);
        self.adjacency.push(Vec::new());
        id
    }

    /// Append an assertion. Self-loops are rejected and return `None`.
    pub fn add(
        &mut self,
        head: Concept,
        relation: Relation,
        tail: Concept,
        weight: f64,
        sim_weight: Option<f64>,
    ) -> Option<AssertionId> {
        if head == tail {
            return None;
        }
        let h = self.intern(head);
        let t = self.intern(tail);
        let id = self.assertions.len() as AssertionId;
        self.assertions.push(Assertion {
            head: h,
            relation,
            tail: t,
            weight,
            sim_weight,
        });
        self.adjacency[h as usize].push(Adjacent {
            neighbor: t,
            assertion: id,
            forward: true,
        });
        self.adjacency[t as usize].push(Adjacent {
            neighbor: h,
            assertion: id,
            forward: false,
        });
        self.pairs.entry(pair_key(h, t)).or_default().push(id);
        Some(id)
    }

    /// Convenience for fixtures: raw surfaces are normalized.
    pub fn add_raw(&mut self, head: &str, relation: Relation, tail: &str, weight: f64) -> Result<Option<AssertionId>> {
        Ok(self.add(Concept::new(head)?, relation, Concept::new(tail)?, weight, None))
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn assertion_count(&self) -> usize {
        self.assertions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assertions.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn concept(&self, id: ConceptId) -> &Concept {
        &self.concepts[id as usize]
    }

    pub fn id(&self, c: &Concept) -> Option<ConceptId> {
        self.index.get(c).copied()
    }

    pub fn id_of(&self, surface: &str) -> Option<ConceptId> {
        Concept::new(surface).ok().and_then(|c| self.id(&c))
    }

    pub fn contains(&self, c: &Concept) -> bool {
        self.index.contains_key(c)
    }

    pub fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }

    pub fn assertion(&self, id: AssertionId) -> &Assertion {
        &self.assertions[id as usize]
    }

    /// Neighbor entries of a concept id, in insertion order.
    pub fn adjacency(&self, id: ConceptId) -> &[Adjacent] {
        &self.adjacency[id as usize]
    }

    /// Neighbors of a concept regardless of stored direction. Unknown
    /// concepts have no neighbors.
    pub fn neighbors(&self, c: &Concept) -> Vec<(&Concept, &Assertion, Adjacent)> {
        match self.id(c) {
            Some(id) => self.adjacency[id as usize]
                .iter()
                .map(|adj| (self.concept(adj.neighbor), self.assertion(adj.assertion), *adj))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Assertion ids linking two concepts in either direction, insertion order.
    pub fn between(&self, a: ConceptId, b: ConceptId) -> &[AssertionId] {
        self.pairs.get(&pair_key(a, b)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn adjacent(&self, a: ConceptId, b: ConceptId) -> bool {
        self.pairs.contains_key(&pair_key(a, b))
    }

    /// Shortest-path distance between two concept ids, capped at two hops.
    pub fn hop_distance_ids(&self, t: ConceptId, x: ConceptId) -> HopDistance {
        if t == x {
            return HopDistance::Zero;
        }
        if self.adjacent(t, x) {
            return HopDistance::One;
        }
        let (small, other) = if self.adjacency[t as usize].len() <= self.adjacency[x as usize].len() {
            (t, x)
        } else {
            (x, t)
        };
        let common = self.adjacency[small as usize]
            .iter()
            .any(|adj| self.adjacent(adj.neighbor, other));
        if common {
            HopDistance::Two
        } else {
            HopDistance::Beyond
        }
    }

    /// Capped distance between two concepts; unknown concepts are
    /// [`HopDistance::Beyond`] unless identical.
    pub fn hop_distance(&self, t: &Concept, x: &Concept) -> HopDistance {
        if t == x {
            return HopDistance::Zero;
        }
        match (self.id(t), self.id(x)) {
            (Some(a), Some(b)) => self.hop_distance_ids(a, b),
            _ => HopDistance::Beyond,
        }
    }

    /// Whether `head` and `tail` are linked at all, and whether an assertion
    /// with `relation` links them in the stated (or, with
    /// [`DirectionMode::Either`], any) direction.
    pub fn lookup(&self, head: &Concept, tail: &Concept, relation: Option<Relation>, mode: DirectionMode) -> MatchReport {
        let (Some(h), Some(t)) = (self.id(head), self.id(tail)) else {
            return MatchReport {
                pair_exists: false,
                assertion_exists: false,
            };
        };
        let ids = self.between(h, t);
        let assertion_exists = relation.is_some_and(|rel| {
            ids.iter().map(|&id| self.assertion(id)).any(|a| {
                a.relation == rel && (mode == DirectionMode::Either || (a.head == h && a.tail == t))
            })
        });
        MatchReport {
            pair_exists: !ids.is_empty(),
            assertion_exists,
        }
    }

    pub fn snapshot(&self) -> GraphSnapshot {
        GraphSnapshot {
            concepts: self.concepts.clone(),
            assertions: self.assertions.clone(),
        }
    }

    /// Rebuild the indexes from a snapshot. Assertion order, and so
    /// neighbor order, is preserved.
    pub fn from_snapshot(snapshot: GraphSnapshot) -> Result<ConceptGraph> {
        let mut graph = ConceptGraph::new();
        for c in &snapshot.concepts {
            graph.intern(c.clone());
        }
        if graph.concepts.len() != snapshot.concepts.len() {
            return Err(Error::InvalidConfig("snapshot has duplicate concepts".into()));
        }
        let n = graph.concepts.len() as ConceptId;
        for a in snapshot.assertions {
            if a.head >= n || a.tail >= n || a.head == a.tail {
                return Err(Error::InvalidConfig("snapshot assertion has bad endpoints".into()));
            }
            let head = graph.concepts[a.head as usize].clone();
            let tail = graph.concepts[a.tail as usize].clone();
            graph.add(head, a.relation, tail, a.weight, a.sim_weight);
        }
        Ok(graph)
    }
}

enum Row {
    Assertion(Concept, Relation, Concept, f64),
    Unmapped,
    OtherLanguage,
    InvalidConcept,
    Malformed,
}

/// Extract the language and term from `/c/<lang>/<term>[/...]`.
fn parse_concept_uri(uri: &str) -> Option<(&str, &str)> {
    let mut parts = uri.strip_prefix("/c/")?.split('/');
    let lang = parts.next().filter(|s| !s.is_empty())?;
    let term = parts.next().filter(|s| !s.is_empty())?;
    Some((lang, term))
}

fn parse_relation(field: &str) -> Option<Relation> {
    let name = field.strip_prefix("/r/").unwrap_or(field).trim_end_matches('/');
    if name.contains('/') {
        return None;
    }
    Relation::from_name(name)
}

fn parse_row(line: &str, lang: &str) -> Row {
    let cols: Vec<&str> = line.split('\t').collect();
    match cols.len() {
        // ConceptNet CSV: assertion uri, relation uri, head uri, tail uri, JSON metadata.
        5 => {
            if !cols[1].starts_with("/r/") {
                return Row::Malformed;
            }
            let weight = serde_json::from_str::<serde_json::Value>(cols[4])
                .ok()
                .and_then(|meta| meta.get("weight").and_then(serde_json::Value::as_f64));
            let Some(weight) = weight.filter(|w| w.is_finite() && *w >= 0.0) else {
                return Row::Malformed;
            };
            let Some(relation) = parse_relation(cols[1]) else {
                return Row::Unmapped;
            };
            let (Some((hl, head)), Some((tl, tail))) = (parse_concept_uri(cols[2]), parse_concept_uri(cols[3])) else {
                return Row::Malformed;
            };
            if hl != lang || tl != lang {
                return Row::OtherLanguage;
            }
            match (Concept::new(head), Concept::new(tail)) {
                (Ok(h), Ok(t)) => Row::Assertion(h, relation, t, weight),
                _ => Row::InvalidConcept,
            }
        }
        // Compact fixture: head, relation, tail, weight.
        4 => {
            let Ok(weight) = cols[3].trim().parse::<f64>() else {
                return Row::Malformed;
            };
            if !weight.is_finite() || weight < 0.0 || cols[0].trim().is_empty() || cols[2].trim().is_empty() {
                return Row::Malformed;
            }
            let Some(relation) = parse_relation(cols[1].trim()) else {
                return Row::Unmapped;
            };
            match (Concept::new(cols[0]), Concept::new(cols[2])) {
                (Ok(h), Ok(t)) => Row::Assertion(h, relation, t, weight),
                _ => Row::InvalidConcept,
            }
        }
        _ => Row::Malformed,
    }
}

/// Read an assertion dump. Both the five-column ConceptNet CSV layout and
/// the compact `head<TAB>relation<TAB>tail<TAB>weight` layout are accepted,
/// row by row. Blank lines and `#` comments are ignored.
pub fn load_assertions(path: &Path, lang: &str) -> Result<(ConceptGraph, LoadReport)> {
    let file = File::open(path).map_err(|source| Error::Ingest {
        path: path.to_path_buf(),
        source,
    })?;
    let mut graph = ConceptGraph::new();
    let mut report = LoadReport::default();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Ingest {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        report.rows += 1;
        match parse_row(line, lang) {
            Row::Assertion(h, r, t, w) => {
                if graph.add(h, r, t, w, None).is_some() {
                    report.kept += 1;
                } else {
                    report.self_loop += 1;
                }
            }
            Row::Unmapped => report.unmapped_relation += 1,
            Row::OtherLanguage => report.language_mismatch += 1,
            Row::InvalidConcept => report.invalid_concept += 1,
            Row::Malformed => {
                report.malformed += 1;
                if report.malformed_lines.len() < MALFORMED_LINES_KEPT {
                    report.malformed_lines.push(lineno + 1);
                }
            }
        }
    }
    if graph.is_empty() {
        return Err(Error::EmptyGraph(path.to_path_buf()));
    }
    Ok((graph, report))
}

/// Keep assertions with `weight >= min_weight` whose endpoint cosine is
/// defined and `>= min_sim`, recording that cosine as `sim_weight`.
pub fn filter_graph(graph: &ConceptGraph, embeddings: &EmbeddingStore, min_weight: f64, min_sim: f64) -> (ConceptGraph, FilterReport) {
    let mut out = ConceptGraph::new();
    let mut report = FilterReport {
        input: graph.assertion_count(),
        min_weight,
        min_sim,
        ..FilterReport::default()
    };
    for a in graph.assertions() {
        if a.weight < min_weight {
            report.below_weight += 1;
            continue;
        }
        let head = graph.concept(a.head);
        let tail = graph.concept(a.tail);
        let Some(sim) = embeddings.cosine(head, tail) else {
            report.missing_embedding += 1;
            continue;
        };
        if sim < min_sim {
            report.below_similarity += 1;
            continue;
        }
        out.add(head.clone(), a.relation, tail.clone(), a.weight, Some(sim));
        report.kept += 1;
    }
    if out.is_empty() {
        log::warn!("filtering removed every assertion");
    }
    (out, report)
}

/// Distances up to two hops from `t` by plain BFS, used by tests as an
/// independent check of [`ConceptGraph::hop_distance_ids`].
pub fn bfs_distances(graph: &ConceptGraph, t: ConceptId) -> HashMap<ConceptId, usize> {
    let mut dist = HashMap::from([(t, 0usize)]);
    let mut frontier = vec![t];
    let mut seen: HashSet<ConceptId> = HashSet::from([t]);
    let mut depth = 0;
    while !frontier.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for v in frontier {
            for adj in graph.adjacency(v) {
                if seen.insert(adj.neighbor) {
                    dist.insert(adj.neighbor, depth);
                    next.push(adj.neighbor);
                }
            }
        }
        frontier = next;
    }
    dist
}
