//! Concepts accuracy and assertion accuracy of generated triplets.

use std::fmt;

use serde::Serialize;

use crate::codec::ParsedOutput;
use crate::kg_store::{ConceptGraph, DirectionMode};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    /// Parsed triplets scored.
    pub total: usize,
    /// Triplets whose (head, tail) pair is linked by any assertion.
    pub pair_hits: usize,
    /// Triplets present as an assertion with the generated relation.
    pub assertion_hits: usize,
    /// `None` when `total` is zero.
    pub concepts_acc: Option<f64>,
    pub assertion_acc: Option<f64>,
    /// Segments that failed to parse; not part of `total`.
    pub unparsed: usize,
    pub direction: DirectionMode,
    /// Which graph the triplets were checked against.
    pub graph: String,
}

/// Score every parsed triplet (duplicates included) against the graph.
pub fn score(parsed: &ParsedOutput, graph: &ConceptGraph, direction: DirectionMode, graph_label: &str) -> AccuracyReport {
    let mut total = 0;
    let mut pair_hits = 0;
    let mut assertion_hits = 0;
    for t in parsed.triplets() {
        total += 1;
        let m = graph.lookup(&t.head, &t.tail, Some(t.relation), direction);
        pair_hits += usize::from(m.pair_exists);
        assertion_hits += usize::from(m.assertion_exists);
    }
    let ratio = |hits: usize| (total > 0).then(|| hits as f64 / total as f64);
    AccuracyReport {
        total,
        pair_hits,
        assertion_hits,
        concepts_acc: ratio(pair_hits),
        assertion_acc: ratio(assertion_hits),
        unparsed: parsed.errors.len(),
        direction,
        graph: graph_label.to_string(),
    }
}

fn percent(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{:.2}%", v * 100.0))
}

impl fmt::Display for AccuracyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "triplets scored:    {}", self.total)?;
        writeln!(f, "unparsed segments:  {}", self.unparsed)?;
        writeln!(f, "pair hits:          {}", self.pair_hits)?;
        writeln!(f, "assertion hits:     {}", self.assertion_hits)?;
        writeln!(f, "concepts accuracy:  {}", percent(self.concepts_acc))?;
        write!(f, "assertion accuracy: {}", percent(self.assertion_acc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::parse_chains;
    use crate::relation::Relation;

    #[test]
    fn empty_input_has_undefined_accuracy() {
        let g = ConceptGraph::new();
        let r = score(&parse_chains("nothing here"), &g, DirectionMode::Strict, "test");
        assert_eq!(r.total, 0);
        assert_eq!(r.unparsed, 1);
        assert!(r.concepts_acc.is_none());
        assert!(r.to_string().contains("undefined"));
    }

    #[test]
    fn graph_copies_score_perfectly() {
        let mut g = ConceptGraph::new();
        g.add_raw("dog", Relation::CapableOf, "eat", 1.0).unwrap();
        g.add_raw("eat", Relation::RelatedTo, "food", 1.0).unwrap();
        let r = score(&parse_chains("dog [capable of] eat; eat [related to] food; dog [capable of] eat"), &g, DirectionMode::Strict, "t");
        assert_eq!((r.total, r.pair_hits, r.assertion_hits), (3, 3, 3));
        assert_eq!(r.concepts_acc, Some(1.0));
        assert_eq!(r.assertion_acc, Some(1.0));
    }

    #[test]
    fn direction_relaxation() {
        let mut g = ConceptGraph::new();
        g.add_raw("dog", Relation::CapableOf, "eat", 1.0).unwrap();
        let parsed = parse_chains("eat [capable of] dog");
        assert_eq!(score(&parsed, &g, DirectionMode::Strict, "t").assertion_hits, 0);
        assert_eq!(score(&parsed, &g, DirectionMode::Either, "t").assertion_hits, 1);
    }
}
