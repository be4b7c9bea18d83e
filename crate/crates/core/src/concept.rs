use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Characters the chain syntax reserves; they may not appear inside a concept.
pub const RESERVED: [char; 4] = ['[', ']', ',', ';'];

/// A normalized concept label: lowercase, words separated by single spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Concept(String);

impl Concept {
    /// Normalize raw text (ConceptNet underscores, mixed case, stray
    /// whitespace) into a concept.
    pub fn new(raw: &str) -> Result<Concept> {
        let surface = normalize(raw);
        if surface.is_empty() || surface.contains(RESERVED) {
            return Err(Error::InvalidConcept(raw.to_string()));
        }
        Ok(Concept(surface))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.0.split(' ')
    }
}

pub fn normalize(raw: &str) -> String {
    raw.replace('_', " ")
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Concept {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Concept {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Concept::new(&value)
    }
}

impl TryFrom<&str> for Concept {
    type Error = Error;

    fn try_from(value: &str) -> Result<Self> {
        Concept::new(value)
    }
}

impl From<Concept> for String {
    fn from(c: Concept) -> String {
        c.0
    }
}
