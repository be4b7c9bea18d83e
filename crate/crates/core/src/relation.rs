//! The fixed relation vocabulary and its bracketed natural-language phrases.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

macro_rules! relations {
    ($($variant:ident => $name:literal, $phrase:literal;)*) => {
        /// One of the 31 relations that have a surface phrase in the chain syntax.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Relation {
            $($variant,)*
        }

        impl Relation {
            pub const ALL: &'static [Relation] = &[$(Relation::$variant,)*];

            /// Canonical identifier, e.g. `AtLocation`.
            pub fn name(self) -> &'static str {
                match self {
                    $(Relation::$variant => $name,)*
                }
            }

            /// Bracketed phrase, e.g. `[typically located at]`.
            pub fn phrase(self) -> &'static str {
                match self {
                    $(Relation::$variant => $phrase,)*
                }
            }
        }
    };
}

relations! {
    RelatedTo => "RelatedTo", "[related to]";
    FormOf => "FormOf", "[form of]";
    IsA => "IsA", "[is a]";
    PartOf => "PartOf", "[part of]";
    HasA => "HasA", "[has a]";
    UsedFor => "UsedFor", "[used for]";
    CapableOf => "CapableOf", "[capable of]";
    AtLocation => "AtLocation", "[typically located at]";
    Causes => "Causes", "[causes]";
    HasSubevent => "HasSubevent", "[has subevent of]";
    HasFirstSubevent => "HasFirstSubevent", "[begins with]";
    HasLastSubevent => "HasLastSubevent", "[concludes with]";
    HasPrerequisite => "HasPrerequisite", "[has prerequisite]";
    HasProperty => "HasProperty", "[has property]";
    MotivatedByGoal => "MotivatedByGoal", "[motivated by goal]";
    ObstructedBy => "ObstructedBy", "[obstructed by]";
    Desires => "Desires", "[desires]";
    CreatedBy => "CreatedBy", "[created by]";
    Synonyms => "Synonyms", "[synonym]";
    Antonyms => "Antonyms", "[antonym]";
    DistinctFrom => "DistinctFrom", "[distinct from]";
    DerivedFrom => "DerivedFrom", "[derived from]";
    SymbolOf => "SymbolOf", "[symbolically represents]";
    DefinedAs => "DefinedAs", "[defined as]";
    MannerOf => "MannerOf", "[manner of]";
    LocatedNear => "LocatedNear", "[located near]";
    HasContext => "HasContext", "[used in context of]";
    SimilarTo => "SimilarTo", "[similar to]";
    CausesDesire => "CausesDesire", "[makes someone want]";
    MadeOf => "MadeOf", "[made of]";
    ReceivesAction => "ReceivesAction", "[receives the action of]";
}

impl Relation {
    /// Resolve a relation identifier. ConceptNet's singular `Synonym`/`Antonym`
    /// are accepted as aliases of the table names.
    pub fn from_name(name: &str) -> Option<Relation> {
        match name {
            "Synonym" => return Some(Relation::Synonyms),
            "Antonym" => return Some(Relation::Antonyms),
            _ => {}
        }
        Relation::ALL.iter().copied().find(|r| r.name() == name)
    }

    /// Resolve a bracketed phrase such as `[is a]`.
    pub fn from_phrase(phrase: &str) -> Option<Relation> {
        Relation::ALL.iter().copied().find(|r| r.phrase() == phrase)
    }

    /// Resolve the text between the brackets, tolerating surrounding or
    /// repeated whitespace.
    pub fn from_phrase_body(body: &str) -> Option<Relation> {
        let body = body.split_whitespace().collect::<Vec<_>>().join(" ");
        Relation::ALL
            .iter()
            .copied()
            .find(|r| r.phrase()[1..r.phrase().len() - 1] == *body)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown relation `{0}`")]
pub struct UnknownRelation(pub String);

impl FromStr for Relation {
    type Err = UnknownRelation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::from_name(s).ok_or_else(|| UnknownRelation(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn table_has_31_distinct_entries() {
        assert_eq!(Relation::ALL.len(), 31);
        let names: HashSet<_> = Relation::ALL.iter().map(|r| r.name()).collect();
        let phrases: HashSet<_> = Relation::ALL.iter().map(|r| r.phrase()).collect();
        assert_eq!(names.len(), 31);
        assert_eq!(phrases.len(), 31);
    }

    #[test]
    fn phrases_are_bracketed() {
        for r in Relation::ALL {
            assert!(r.phrase().starts_with('[') && r.phrase().ends_with(']'));
            assert!(!r.phrase()[1..r.phrase().len() - 1].contains(['[', ']']));
        }
    }

    #[test]
    fn round_trips() {
        for &r in Relation::ALL {
            assert_eq!(Relation::from_phrase(r.phrase()), Some(r));
            assert_eq!(Relation::from_name(r.name()), Some(r));
        }
    }

    #[test]
    fn aliases_and_unknowns() {
        assert_eq!(Relation::from_name("Synonym"), Some(Relation::Synonyms));
        assert_eq!(Relation::from_name("Antonym"), Some(Relation::Antonyms));
        assert_eq!(Relation::from_name("ExternalURL"), None);
        assert_eq!(Relation::from_phrase_body(" has  property "), Some(Relation::HasProperty));
        assert!("NotARelation".parse::<Relation>().is_err());
    }
}
