//! Second-order biased random walks over a filtered concept graph.
//!
//! From concept `v`, reached from `t`, the unnormalized weight of moving to
//! neighbor `x` is `alpha(t, x) * w(v, x)`, where `w` is the embedding cosine
//! stored on the assertion and `alpha` is `1/p`, `1` or `1/q` for a capped
//! distance `d(t, x)` of 0, 1 or 2. The first step uses `w` alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concept::Concept;
use crate::error::{Error, Result};
use crate::kg_store::{AssertionId, ConceptGraph, ConceptId, HopDistance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    /// Maximum number of concepts per walk.
    pub length: usize,
    /// Full passes over every start concept.
    pub passes: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            p: 2.0,
            q: 1.5,
            length: 10,
            passes: 2,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::InvalidConfig(format!("p must be positive, got {}", self.p)));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::InvalidConfig(format!("q must be positive, got {}", self.q)));
        }
        if self.length < 2 {
            return Err(Error::InvalidConfig(format!("walk length must be at least 2, got {}", self.length)));
        }
        if self.passes == 0 {
            return Err(Error::InvalidConfig("passes must be at least 1".into()));
        }
        Ok(())
    }

    /// Search bias for a candidate at capped distance `d` from the previous
    /// concept.
    pub fn alpha(&self, d: HopDistance) -> f64 {
        match d {
            HopDistance::Zero => 1.0 / self.p,
            HopDistance::One => 1.0,
            HopDistance::Two | HopDistance::Beyond => 1.0 / self.q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub concept: ConceptId,
    /// Assertion traversed if this candidate is chosen.
    pub assertion: AssertionId,
    pub alpha: f64,
    /// Unnormalized weight `alpha * w`.
    pub pi: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDistribution {
    pub entries: Vec<Candidate>,
    /// Normalizer: the sum of all `pi`.
    pub z: f64,
}

impl TransitionDistribution {
    /// Pick a candidate with `u` uniform in `[0, 1)`.
    pub fn pick(&self, u: f64) -> &Candidate {
        let target = u * self.z;
        let mut acc = 0.0;
        for c in &self.entries {
            acc += c.pi;
            if target < acc {
                return c;
            }
        }
        self.entries.last().expect("distribution is never empty")
    }
}

/// Capped distance from `prev` to a neighbor `x` of `current`, where
/// `prev` is itself a neighbor of `current` during a walk.
fn distance_via(graph: &ConceptGraph, prev: ConceptId, current: ConceptId, x: ConceptId) -> HopDistance {
    if prev == x {
        HopDistance::Zero
    } else if graph.adjacent(prev, x) {
        HopDistance::One
    } else if graph.adjacent(prev, current) {
        HopDistance::Two
    } else {
        graph.hop_distance_ids(prev, x)
    }
}

/// Next-step distribution from `current`, having arrived from `prev`
/// (`None` on the first step). Each distinct neighbor is one candidate;
/// among parallel assertions the highest-weight one (earliest on ties) is
/// the one traversed. Neighbors without a positive similarity weight are
/// not candidates. Returns `None` at a dead end.
pub fn transition_distribution(
    graph: &ConceptGraph,
    prev: Option<ConceptId>,
    current: ConceptId,
    cfg: &WalkConfig,
) -> Option<TransitionDistribution> {
    let mut entries: Vec<Candidate> = Vec::new();
    for adj in graph.adjacency(current) {
        let a = graph.assertion(adj.assertion);
        let Some(w) = a.sim_weight.filter(|w| *w > 0.0) else {
            continue;
        };
        if let Some(existing) = entries.iter_mut().find(|c| c.concept == adj.neighbor) {
            if a.weight > graph.assertion(existing.assertion).weight {
                existing.assertion = adj.assertion;
            }
            continue;
        }
        let alpha = prev.map_or(1.0, |t| cfg.alpha(distance_via(graph, t, current, adj.neighbor)));
        entries.push(Candidate {
            concept: adj.neighbor,
            assertion: adj.assertion,
            alpha,
            pi: alpha * w,
            probability: 0.0,
        });
    }
    let z: f64 = entries.iter().map(|c| c.pi).sum();
    if entries.is_empty() || z <= 0.0 {
        return None;
    }
    for c in &mut entries {
        c.probability = c.pi / z;
    }
    Some(TransitionDistribution { entries, z })
}

/// A sampled chain of concepts; `assertions[i]` links `concepts[i]` and
/// `concepts[i + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Walk {
    pub concepts: Vec<ConceptId>,
    pub assertions: Vec<AssertionId>,
}

impl Walk {
    pub fn start(&self) -> ConceptId {
        self.concepts[0]
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.len() < 2
    }
}

/// Walk from `start` until `cfg.length` concepts or a dead end.
pub fn sample_walk<R: Rng + ?Sized>(graph: &ConceptGraph, start: ConceptId, cfg: &WalkConfig, rng: &mut R) -> Walk {
    let mut walk = Walk {
        concepts: vec![start],
        assertions: Vec::new(),
    };
    let mut prev = None;
    let mut current = start;
    while walk.concepts.len() < cfg.length {
        let Some(dist) = transition_distribution(graph, prev, current, cfg) else {
            break;
        };
        let next = *dist.pick(rng.random::<f64>());
        walk.concepts.push(next.concept);
        walk.assertions.push(next.assertion);
        prev = Some(current);
        current = next.concept;
    }
    walk
}

/// [`sample_walk`] by concept, rejecting concepts not in the graph.
pub fn sample_walk_from<R: Rng + ?Sized>(graph: &ConceptGraph, start: &Concept, cfg: &WalkConfig, rng: &mut R) -> Result<Walk> {
    let id = graph.id(start).ok_or_else(|| Error::UnknownConcept(start.to_string()))?;
    Ok(sample_walk(graph, id, cfg, rng))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent random stream for one walk, a pure function of its
/// coordinates.
pub fn walk_rng(seed: u64, pass: usize, start: ConceptId) -> ChaCha8Rng {
    let coord = ((pass as u64) << 32) | u64::from(start);
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(coord)))
}

/// One walk per (pass, start concept), in that canonical order, keeping only
/// walks of at least two concepts. `starts` overrides the default of every
/// concept in id order. Runs on the current rayon pool; output does not
/// depend on the number of workers.
pub fn generate_walks(graph: &ConceptGraph, cfg: &WalkConfig, starts: Option<&[ConceptId]>) -> Result<Vec<Walk>> {
    cfg.validate()?;
    if graph.is_empty() {
        return Err(Error::EmptyInput("graph"));
    }
    let all: Vec<ConceptId>;
    let starts = match starts {
        Some(s) => s,
        None => {
            all = (0..graph.concept_count() as ConceptId).collect();
            &all
        }
    };
    let jobs: Vec<(usize, ConceptId)> = (0..cfg.passes).flat_map(|pass| starts.iter().map(move |&s| (pass, s))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(pass, start)| sample_walk(graph, start, cfg, &mut walk_rng(cfg.seed, pass, start)))
        .filter(|w| !w.is_empty())
        .collect())
}

/// Number of concepts with at least one usable next step; a full run emits
/// `passes` times this many walks.
pub fn eligible_starts(graph: &ConceptGraph, cfg: &WalkConfig) -> usize {
    (0..graph.concept_count() as ConceptId)
        .filter(|&v| transition_distribution(graph, None, v, cfg).is_some())
        .count()
}
