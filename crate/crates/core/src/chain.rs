//! Triplets and their surface form: `head [phrase] tail, head [phrase] tail`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::concept::Concept;
use crate::kg_store::{Assertion, ConceptGraph};
use crate::relation::Relation;

/// Leading marker of every commonsense segment.
pub const COMMONSENSE_TOKEN: &str = "<|commonsense|>";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triplet {
    pub head: Concept,
    pub relation: Relation,
    pub tail: Concept,
}

impl Triplet {
    pub fn new(head: Concept, relation: Relation, tail: Concept) -> Self {
        Triplet { head, relation, tail }
    }

    /// The stored orientation of a graph assertion.
    pub fn from_assertion(graph: &ConceptGraph, a: &Assertion) -> Self {
        Triplet {
            head: graph.concept(a.head).clone(),
            relation: a.relation,
            tail: graph.concept(a.tail).clone(),
        }
    }
}

impl fmt::Display for Triplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.head, self.relation.phrase(), self.tail)
    }
}

/// An ordered, non-empty sequence of triplets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TripletChain(Vec<Triplet>);

impl TripletChain {
    /// `None` for an empty list.
    pub fn new(triplets: Vec<Triplet>) -> Option<Self> {
        (!triplets.is_empty()).then_some(TripletChain(triplets))
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_triplets(self) -> Vec<Triplet> {
        self.0
    }
}

impl fmt::Display for TripletChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Chains joined with `; ` and terminated with `;`. Empty input renders as
/// the empty string.
pub fn render_chains<'a, I>(chains: I) -> String
where
    I: IntoIterator<Item = &'a TripletChain>,
{
    let parts: Vec<String> = chains.into_iter().map(ToString::to_string).collect();
    if parts.is_empty() {
        String::new()
    } else {
        format!("{};", parts.join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(h: &str, r: Relation, tl: &str) -> Triplet {
        Triplet::new(Concept::new(h).unwrap(), r, Concept::new(tl).unwrap())
    }

    #[test]
    fn single_triplet_has_no_comma() {
        let chain = TripletChain::new(vec![t("surfer", Relation::RelatedTo, "surf")]).unwrap();
        assert_eq!(chain.to_string(), "surfer [related to] surf");
    }

    #[test]
    fn render_joins_and_terminates() {
        let a = TripletChain::new(vec![t("table", Relation::RelatedTo, "eat")]).unwrap();
        let b = TripletChain::new(vec![
            t("burger", Relation::IsA, "food"),
            t("food", Relation::CausesDesire, "eat"),
        ])
        .unwrap();
        assert_eq!(
            render_chains([&a, &b]),
            "table [related to] eat; burger [is a] food, food [makes someone want] eat;"
        );
        assert_eq!(render_chains(std::iter::empty()), "");
        assert!(TripletChain::new(vec![]).is_none());
    }
}
