//! Parser for generated triplet-chain text.
//!
//! Grammar, after stripping an optional leading `<|commonsense|>` (and an
//! optional `:` after it):
//!
//! ```text
//! text    := chain (";" chain)* [";"]
//! chain   := triplet ("," triplet)*
//! triplet := head "[" phrase "]" tail
//! ```
//!
//! Anything from the first `[SYSTEM]` or `[USER]` marker on is a response,
//! not commonsense, and is ignored. The parser is total: every non-empty
//! triplet segment yields either a triplet or a [`ParseError`].

use serde::Serialize;

use crate::chain::{Triplet, TripletChain, COMMONSENSE_TOKEN};
use crate::concept::Concept;
use crate::relation::Relation;

pub const SPEAKER_MARKERS: [&str; 2] = ["[SYSTEM]", "[USER]"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseError {
    pub segment: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedOutput {
    pub chains: Vec<TripletChain>,
    pub errors: Vec<ParseError>,
}

impl ParsedOutput {
    pub fn triplets(&self) -> impl Iterator<Item = &Triplet> {
        self.chains.iter().flat_map(|c| c.triplets())
    }

    pub fn triplet_count(&self) -> usize {
        self.chains.iter().map(TripletChain::len).sum()
    }

    pub fn extend(&mut self, other: ParsedOutput) {
        self.chains.extend(other.chains);
        self.errors.extend(other.errors);
    }
}

/// Drop the leading commonsense token and the response tail, if any.
pub fn commonsense_body(text: &str) -> &str {
    let mut body = text.trim_start();
    if let Some(rest) = body.strip_prefix(COMMONSENSE_TOKEN) {
        body = rest.trim_start();
        body = body.strip_prefix(':').unwrap_or(body);
    }
    let cut = SPEAKER_MARKERS
        .iter()
        .filter_map(|m| body.find(m))
        .min()
        .unwrap_or(body.len());
    &body[..cut]
}

pub fn parse_triplet(segment: &str) -> Result<Triplet, String> {
    let opens = segment.matches('[').count();
    let closes = segment.matches(']').count();
    if opens == 0 && closes == 0 {
        return Err("no relation phrase".into());
    }
    if opens != 1 || closes != 1 {
        return Err("expected exactly one bracketed relation phrase".into());
    }
    let open = segment.find('[').unwrap_or(0);
    let close = segment.find(']').unwrap_or(0);
    if close < open {
        return Err("unbalanced brackets".into());
    }
    let body = &segment[open + 1..close];
    let relation = Relation::from_phrase_body(body).ok_or_else(|| format!("unknown relation phrase `[{}]`", body.trim()))?;
    let head = segment[..open].trim();
    let tail = segment[close + 1..].trim();
    if head.is_empty() {
        return Err("empty head".into());
    }
    if tail.is_empty() {
        return Err("empty tail".into());
    }
    let head = Concept::new(head).map_err(|e| e.to_string())?;
    let tail = Concept::new(tail).map_err(|e| e.to_string())?;
    Ok(Triplet::new(head, relation, tail))
}

/// Parse one generation into chains, collecting per-segment errors.
pub fn parse_chains(text: &str) -> ParsedOutput {
    let mut out = ParsedOutput::default();
    for chain_text in commonsense_body(text).split(';') {
        let mut triplets = Vec::new();
        for segment in chain_text.split(',') {
            if segment.trim().is_empty() {
                continue;
            }
            match parse_triplet(segment) {
                Ok(t) => triplets.push(t),
                Err(reason) => out.errors.push(ParseError {
                    segment: segment.trim().to_string(),
                    reason,
                }),
            }
        }
        if let Some(chain) = TripletChain::new(triplets) {
            out.chains.push(chain);
        }
    }
    out
}
