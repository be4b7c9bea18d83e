//! One-hop and two-hop triplet extraction between concepts, and two-way
//! (commonsense <-> sentence) training records built from it.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{render_chains, Triplet, TripletChain, COMMONSENSE_TOKEN};
use crate::concept::Concept;
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::kg_store::{AssertionId, ConceptGraph, ConceptId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    /// Two-hop search runs only if the pair's cosine is at least this.
    pub pair_threshold: f64,
    /// A middle qualifies if its cosine with either endpoint exceeds this.
    pub middle_threshold: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            pair_threshold: 0.3,
            middle_threshold: 0.5,
        }
    }
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("pair_threshold", self.pair_threshold), ("middle_threshold", self.middle_threshold)] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [-1, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoMatch {
    UnknownConcept,
    UndefinedSimilarity,
    BelowPairThreshold,
    NoQualifyingMiddle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairOutcome {
    OneHop(Triplet),
    TwoHop { middle: Concept, first: Triplet, second: Triplet },
    None(NoMatch),
}

impl PairOutcome {
    pub fn chain(&self) -> Option<TripletChain> {
        match self {
            PairOutcome::OneHop(t) => TripletChain::new(vec![t.clone()]),
            PairOutcome::TwoHop { first, second, .. } => TripletChain::new(vec![first.clone(), second.clone()]),
            PairOutcome::None(_) => None,
        }
    }
}

/// Strongest assertion between two concepts: highest weight, then
/// lexicographically smallest relation name, then earliest.
pub fn best_assertion(graph: &ConceptGraph, a: ConceptId, b: ConceptId) -> Option<AssertionId> {
    graph.between(a, b).iter().copied().reduce(|best, id| {
        let (x, y) = (graph.assertion(best), graph.assertion(id));
        if y.weight > x.weight || (y.weight == x.weight && y.relation.name() < x.relation.name()) {
            id
        } else {
            best
        }
    })
}

/// Commonsense linking `a` and `b`: the strongest direct assertion if one
/// exists; otherwise, when `cos(a, b)` clears the pair threshold, the
/// two-edge path through a middle concept that clears the middle threshold
/// with the largest summed weight (ties go to the lexicographically
/// smallest middle).
pub fn extract_pair(graph: &ConceptGraph, store: &EmbeddingStore, a: &Concept, b: &Concept, cfg: &ExtractConfig) -> PairOutcome {
    let (Some(ia), Some(ib)) = (graph.id(a), graph.id(b)) else {
        return PairOutcome::None(NoMatch::UnknownConcept);
    };
    if ia == ib {
        return PairOutcome::None(NoMatch::UnknownConcept);
    }
    if let Some(id) = best_assertion(graph, ia, ib) {
        return PairOutcome::OneHop(Triplet::from_assertion(graph, graph.assertion(id)));
    }
    let Some(pair_sim) = store.cosine(a, b) else {
        return PairOutcome::None(NoMatch::UndefinedSimilarity);
    };
    if pair_sim < cfg.pair_threshold {
        return PairOutcome::None(NoMatch::BelowPairThreshold);
    }
    let mut best: Option<(f64, ConceptId, AssertionId, AssertionId)> = None;
    let mut visited = Vec::new();
    for adj in graph.adjacency(ia) {
        let m = adj.neighbor;
        if m == ib || visited.contains(&m) || !graph.adjacent(m, ib) {
            continue;
        }
        visited.push(m);
        let middle = graph.concept(m);
        let near = |end: &Concept| store.cosine(middle, end).is_some_and(|s| s > cfg.middle_threshold);
        if !(near(a) || near(b)) {
            continue;
        }
        let (Some(e1), Some(e2)) = (best_assertion(graph, ia, m), best_assertion(graph, m, ib)) else {
            continue;
        };
        let score = graph.assertion(e1).weight + graph.assertion(e2).weight;
        let better = match best {
            None => true,
            Some((s, bm, _, _)) => score > s || (score == s && middle < graph.concept(bm)),
        };
        if better {
            best = Some((score, m, e1, e2));
        }
    }
    match best {
        Some((_, m, e1, e2)) => PairOutcome::TwoHop {
            middle: graph.concept(m).clone(),
            first: Triplet::from_assertion(graph, graph.assertion(e1)),
            second: Triplet::from_assertion(graph, graph.assertion(e2)),
        },
        None => PairOutcome::None(NoMatch::NoQualifyingMiddle),
    }
}

/// 2 to 8 distinct concepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptSet(Vec<Concept>);

impl ConceptSet {
    pub const MAX: usize = 8;

    /// Normalizes and de-duplicates (first occurrence wins).
    pub fn new<S: AsRef<str>>(raw: &[S]) -> Result<ConceptSet> {
        let mut concepts: Vec<Concept> = Vec::new();
        for r in raw {
            let c = Concept::new(r.as_ref())?;
            if !concepts.contains(&c) {
                concepts.push(c);
            }
        }
        if !(2..=Self::MAX).contains(&concepts.len()) {
            return Err(Error::InvalidConfig(format!(
                "a concept set needs 2..={} distinct concepts, got {}",
                Self::MAX,
                concepts.len()
            )));
        }
        Ok(ConceptSet(concepts))
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.0
    }

    /// Unordered pairs in canonical order: by position of the first
    /// concept, then of the second.
    pub fn pairs(&self) -> impl Iterator<Item = (&Concept, &Concept)> {
        let cs = &self.0;
        (0..cs.len()).flat_map(move |i| (i + 1..cs.len()).map(move |j| (&cs[i], &cs[j])))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairResult {
    pub a: Concept,
    pub b: Concept,
    pub outcome: PairOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExtractionResult {
    pub pairs: Vec<PairResult>,
}

impl ExtractionResult {
    pub fn chains(&self) -> Vec<TripletChain> {
        self.pairs.iter().filter_map(|p| p.outcome.chain()).collect()
    }

    pub fn triplet_count(&self) -> usize {
        self.chains().iter().map(TripletChain::len).sum()
    }

    /// `; `-joined chains with a trailing `;`, or empty.
    pub fn render(&self) -> String {
        render_chains(&self.chains())
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.iter().all(|p| matches!(p.outcome, PairOutcome::None(_)))
    }
}

pub fn extract_set(graph: &ConceptGraph, store: &EmbeddingStore, set: &ConceptSet, cfg: &ExtractConfig) -> ExtractionResult {
    ExtractionResult {
        pairs: set
            .pairs()
            .map(|(a, b)| PairResult {
                a: a.clone(),
                b: b.clone(),
                outcome: extract_pair(graph, store, a, b, cfg),
            })
            .collect(),
    }
}

/// One CommonGen-style entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonGenEntry {
    pub concepts: Vec<String>,
    #[serde(alias = "scene")]
    pub sentences: Vec<String>,
}

pub fn read_commongen(path: &Path) -> Result<Vec<CommonGenEntry>> {
    let file = File::open(path).map_err(|source| Error::Ingest {
        path: path.to_path_buf(),
        source,
    })?;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Ingest {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    CsToSentence,
    SentenceToCs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoWayRecord {
    pub direction: Direction,
    pub input: String,
    pub target: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TwoWayStats {
    pub entries: usize,
    /// Entries whose concept list was not a valid set.
    pub invalid_entries: usize,
    /// Entries with no extracted triplet.
    pub skipped_empty: usize,
    /// Triplet-sentence pairs; each yields two records.
    pub pairs: usize,
    pub records: usize,
    /// Mean triplets per triplet-sentence pair; `None` without pairs.
    pub mean_triplets: Option<f64>,
}

/// Both record directions for every (extraction, sentence) pair with a
/// non-empty extraction. Parallel over entries; output keeps input order.
pub fn build_two_way(entries: &[CommonGenEntry], graph: &ConceptGraph, store: &EmbeddingStore, cfg: &ExtractConfig) -> (Vec<TwoWayRecord>, TwoWayStats) {
    enum Outcome {
        Invalid,
        Empty,
        Extracted(String, usize),
    }
    let outcomes: Vec<Outcome> = entries
        .par_iter()
        .map(|e| match ConceptSet::new(&e.concepts) {
            Err(_) => Outcome::Invalid,
            Ok(set) => {
                let result = extract_set(graph, store, &set, cfg);
                if result.is_empty() {
                    Outcome::Empty
                } else {
                    Outcome::Extracted(format!("{COMMONSENSE_TOKEN} {}", result.render()), result.triplet_count())
                }
            }
        })
        .collect();
    let mut stats = TwoWayStats {
        entries: entries.len(),
        ..TwoWayStats::default()
    };
    let mut records = Vec::new();
    let mut triplet_total = 0usize;
    for (entry, outcome) in entries.iter().zip(outcomes) {
        match outcome {
            Outcome::Invalid => stats.invalid_entries += 1,
            Outcome::Empty => stats.skipped_empty += 1,
            Outcome::Extracted(cs, n) => {
                for sentence in &entry.sentences {
                    let sentence = sentence.trim();
                    if sentence.is_empty() {
                        continue;
                    }
                    records.push(TwoWayRecord {
                        direction: Direction::CsToSentence,
                        input: cs.clone(),
                        target: sentence.to_string(),
                    });
                    records.push(TwoWayRecord {
                        direction: Direction::SentenceToCs,
                        input: sentence.to_string(),
                        target: cs.clone(),
                    });
                    stats.pairs += 1;
                    triplet_total += n;
                }
            }
        }
    }
    stats.records = records.len();
    stats.mean_triplets = (stats.pairs > 0).then(|| triplet_total as f64 / stats.pairs as f64);
    (records, stats)
}
