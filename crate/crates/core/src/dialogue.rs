//! Commonsense-annotated dialogue records.
//!
//! Every system turn with at least one preceding turn yields a record whose
//! context is the previous (at most three) turns. Chains come from pairs of
//! context keywords and from context-response keyword pairs, and each chain
//! is tagged with where it came from.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{render_chains, TripletChain, COMMONSENSE_TOKEN};
use crate::concept::Concept;
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::extract::{extract_pair, ExtractConfig};
use crate::keywords::KeywordMiner;
use crate::kg_store::ConceptGraph;

pub const MAX_CONTEXT_TURNS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Speaker {
    User,
    System,
}

impl Speaker {
    pub fn marker(self) -> &'static str {
        match self {
            Speaker::User => "[USER]",
            Speaker::System => "[SYSTEM]",
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.marker())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
}

/// One input dialogue. Without explicit speakers, turns alternate
/// starting with the user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub turns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speakers: Option<Vec<Speaker>>,
}

impl Dialogue {
    pub fn speaker_turns(&self) -> Vec<Turn> {
        self.turns
            .iter()
            .enumerate()
            .map(|(i, text)| Turn {
                speaker: self
                    .speakers
                    .as_ref()
                    .and_then(|s| s.get(i).copied())
                    .unwrap_or(if i % 2 == 0 { Speaker::User } else { Speaker::System }),
                text: text.clone(),
            })
            .collect()
    }
}

/// Read a `{ "<dialogue id>": { "turns": [...], ... } }` file. Entries come
/// back ordered by id; unknown fields are ignored.
pub fn read_dialogues(path: &Path) -> Result<BTreeMap<String, Dialogue>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Ingest {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Links two context keywords only.
    ContextOnly,
    /// Links a context keyword to a response keyword only.
    ContextResponse,
    /// Arises from both kinds of keyword pair.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub dialogue_id: String,
    /// Index of the response turn in the dialogue.
    pub turn_index: usize,
    pub context: Vec<Turn>,
    pub cs_chains: Vec<TripletChain>,
    /// Parallel to `cs_chains`.
    pub provenance: Vec<Provenance>,
    pub response: String,
}

/// Model input (speaker-tagged context) and target (commonsense, then the
/// response after a `[SYSTEM]` marker).
pub fn serialize_record(record: &DialogueRecord) -> (String, String) {
    let start = record.context.len().saturating_sub(MAX_CONTEXT_TURNS);
    let input = record.context[start..]
        .iter()
        .map(|t| format!("{} {}", t.speaker, t.text.trim()))
        .collect::<Vec<_>>()
        .join(" ");
    let response = format!("{} {}", Speaker::System, record.response.trim());
    let target = if record.cs_chains.is_empty() {
        response
    } else {
        format!("{COMMONSENSE_TOKEN} {} {response}", render_chains(&record.cs_chains))
    };
    (input, target)
}

/// JSON-Lines output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub id: String,
    pub input: String,
    pub target: String,
    pub provenance: Vec<Provenance>,
}

impl From<&DialogueRecord> for TrainingRow {
    fn from(r: &DialogueRecord) -> Self {
        let (input, target) = serialize_record(r);
        TrainingRow {
            id: format!("{}#{}", r.dialogue_id, r.turn_index),
            input,
            target,
            provenance: r.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DialogueStats {
    pub dialogues: usize,
    /// Dialogues without a usable system turn.
    pub skipped_dialogues: usize,
    pub records: usize,
    pub records_without_chains: usize,
    pub context_only: usize,
    pub context_response: usize,
    pub both: usize,
    /// Percentages of all chains; `None` when there are no chains.
    pub context_only_pct: Option<f64>,
    pub context_response_pct: Option<f64>,
    pub both_pct: Option<f64>,
}

impl DialogueStats {
    pub fn chains(&self) -> usize {
        self.context_only + self.context_response + self.both
    }

    fn finish(&mut self) {
        let total = self.chains();
        let pct = |n: usize| (total > 0).then(|| 100.0 * n as f64 / total as f64);
        self.context_only_pct = pct(self.context_only);
        self.context_response_pct = pct(self.context_response);
        self.both_pct = pct(self.both);
    }
}

/// True when every word of `a` occurs, in order, inside `b` or vice versa,
/// e.g. `lose` and `lose weight`.
fn overlapping(a: &Concept, b: &Concept) -> bool {
    let contains = |outer: &Concept, inner: &Concept| {
        let o: Vec<&str> = outer.words().collect();
        let i: Vec<&str> = inner.words().collect();
        i.len() <= o.len() && o.windows(i.len()).any(|w| w == i.as_slice())
    };
    contains(a, b) || contains(b, a)
}

struct Builder<'a> {
    graph: &'a ConceptGraph,
    store: &'a EmbeddingStore,
    miner: &'a KeywordMiner,
    cfg: &'a ExtractConfig,
}

impl Builder<'_> {
    fn annotate(&self, context: &[Turn], response: &str) -> Vec<(TripletChain, Provenance)> {
        let context_text = context.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
        let ctx: Vec<Concept> = self.miner.extract(&context_text, Some(self.graph)).concepts().cloned().collect();
        let resp: Vec<Concept> = self.miner.extract(response, Some(self.graph)).concepts().cloned().collect();

        let mut found: Vec<(TripletChain, bool, bool)> = Vec::new();
        let mut note = |a: &Concept, b: &Concept, from_context: bool| {
            if overlapping(a, b) {
                return;
            }
            if let Some(chain) = extract_pair(self.graph, self.store, a, b, self.cfg).chain() {
                match found.iter_mut().find(|(c, _, _)| *c == chain) {
                    Some(entry) if from_context => entry.1 = true,
                    Some(entry) => entry.2 = true,
                    None => found.push((chain, from_context, !from_context)),
                }
            }
        };
        for i in 0..ctx.len() {
            for j in i + 1..ctx.len() {
                note(&ctx[i], &ctx[j], true);
            }
        }
        for a in &ctx {
            for b in &resp {
                note(a, b, false);
            }
        }
        found
            .into_iter()
            .map(|(chain, c, r)| {
                let tag = match (c, r) {
                    (true, true) => Provenance::Both,
                    (true, false) => Provenance::ContextOnly,
                    _ => Provenance::ContextResponse,
                };
                (chain, tag)
            })
            .collect()
    }

    fn records(&self, id: &str, dialogue: &Dialogue) -> Vec<DialogueRecord> {
        let turns = dialogue.speaker_turns();
        let mut out = Vec::new();
        for (i, turn) in turns.iter().enumerate() {
            if turn.speaker != Speaker::System || i == 0 {
                continue;
            }
            let context = turns[i.saturating_sub(MAX_CONTEXT_TURNS)..i].to_vec();
            let (cs_chains, provenance) = self.annotate(&context, &turn.text).into_iter().unzip();
            out.push(DialogueRecord {
                dialogue_id: id.to_string(),
                turn_index: i,
                context,
                cs_chains,
                provenance,
                response: turn.text.clone(),
            });
        }
        out
    }
}

/// Records for every dialogue, ordered by (dialogue id, turn index), plus
/// provenance statistics over all extracted chains.
pub fn build_records(
    dialogues: &BTreeMap<String, Dialogue>,
    graph: &ConceptGraph,
    store: &EmbeddingStore,
    miner: &KeywordMiner,
    cfg: &ExtractConfig,
) -> (Vec<DialogueRecord>, DialogueStats) {
    let builder = Builder { graph, store, miner, cfg };
    let per_dialogue: Vec<Vec<DialogueRecord>> = dialogues
        .par_iter()
        .map(|(id, d)| builder.records(id, d))
        .collect();
    let mut stats = DialogueStats {
        dialogues: dialogues.len(),
        ..DialogueStats::default()
    };
    let mut records = Vec::new();
    for recs in per_dialogue {
        if recs.is_empty() {
            stats.skipped_dialogues += 1;
        }
        for r in recs {
            if r.cs_chains.is_empty() {
                stats.records_without_chains += 1;
            }
            for p in &r.provenance {
                match p {
                    Provenance::ContextOnly => stats.context_only += 1,
                    Provenance::ContextResponse => stats.context_response += 1,
                    Provenance::Both => stats.both += 1,
                }
            }
            records.push(r);
        }
    }
    stats.records = records.len();
    stats.finish();
    (records, stats)
}
