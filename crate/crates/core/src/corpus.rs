//! Walk serialization, prompt templates and the train/valid/test corpus.

use std::collections::HashSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{Triplet, TripletChain, COMMONSENSE_TOKEN};
use crate::error::{Error, Result};
use crate::kg_store::ConceptGraph;
use crate::walk::Walk;

pub const SPLIT_RATIOS: (f64, f64, f64) = (0.8, 0.1, 0.1);

/// Turn a walk into a chain. Each step keeps the stored orientation of the
/// assertion it traversed, so a chain may locally read against walk order.
pub fn serialize_walk(graph: &ConceptGraph, walk: &Walk) -> Result<TripletChain> {
    if walk.len() < 2 {
        return Err(Error::WalkTooShort(walk.len()));
    }
    let triplets = walk
        .assertions
        .iter()
        .map(|&id| Triplet::from_assertion(graph, graph.assertion(id)))
        .collect();
    Ok(TripletChain::new(triplets).expect("walk has at least one step"))
}

/// The four prompt shapes, each a prefix of the serialized chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Template {
    /// First head and relation phrase.
    HeadRelation = 1,
    /// First triplet.
    FirstTriplet = 2,
    /// First triplet, then the second head and relation phrase.
    SecondHeadRelation = 3,
    /// First two triplets.
    TwoTriplets = 4,
}

impl Template {
    pub const ALL: [Template; 4] = [
        Template::HeadRelation,
        Template::FirstTriplet,
        Template::SecondHeadRelation,
        Template::TwoTriplets,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    /// Templates usable for a chain: the last two need a second triplet.
    pub fn eligible(chain: &TripletChain) -> &'static [Template] {
        if chain.len() >= 2 {
            &Template::ALL
        } else {
            &Template::ALL[..2]
        }
    }

    /// Render the prompt. A full triplet is followed by `,` only when the
    /// chain continues, so the prompt is always a prefix of
    /// `<|commonsense|> ` + chain.
    pub fn render(self, chain: &TripletChain) -> String {
        let ts = chain.triplets();
        let first = &ts[0];
        let comma_after = |i: usize| if ts.len() > i + 1 { "," } else { "" };
        match self {
            Template::HeadRelation => format!("{COMMONSENSE_TOKEN} {} {}", first.head, first.relation.phrase()),
            Template::FirstTriplet => format!("{COMMONSENSE_TOKEN} {first}{}", comma_after(0)),
            Template::SecondHeadRelation => {
                let second = &ts[1];
                format!("{COMMONSENSE_TOKEN} {first}, {} {}", second.head, second.relation.phrase())
            }
            Template::TwoTriplets => format!("{COMMONSENSE_TOKEN} {first}, {}{}", ts[1], comma_after(1)),
        }
    }
}

impl From<Template> for u8 {
    fn from(t: Template) -> u8 {
        t.id()
    }
}

impl TryFrom<u8> for Template {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Template::ALL
            .get(usize::from(v).wrapping_sub(1))
            .copied()
            .ok_or_else(|| format!("template id must be 1..=4, got {v}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptedExample {
    pub id: String,
    pub prompt: String,
    pub target: String,
    pub template_id: Template,
    pub split: Split,
}

/// Stable identifier of a serialized chain.
pub fn example_id(target: &str) -> String {
    hex::encode(&Sha256::digest(target.as_bytes())[..8])
}

fn keyed_seed(seed: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Choose a template uniformly among the eligible ones and render it.
pub fn apply_templates<R: Rng + ?Sized>(chain: &TripletChain, rng: &mut R) -> (Template, String) {
    let eligible = Template::eligible(chain);
    let template = eligible[rng.random_range(0..eligible.len())];
    (template, template.render(chain))
}

fn prompted(chain: &TripletChain, prompt_seed: u64, split: Split) -> PromptedExample {
    let target = chain.to_string();
    let id = example_id(&target);
    let mut rng = ChaCha8Rng::seed_from_u64(keyed_seed(prompt_seed, &id));
    let (template_id, prompt) = apply_templates(chain, &mut rng);
    PromptedExample {
        id,
        prompt,
        target,
        template_id,
        split,
    }
}

/// Split sizes for `n` examples: train and valid are rounded shares, test
/// takes the remainder.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = (n as f64 * SPLIT_RATIOS.0).round() as usize;
    let valid = ((n as f64 * SPLIT_RATIOS.1).round() as usize).min(n - train);
    (train, valid, n - train - valid)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub train: Vec<PromptedExample>,
    pub valid: Vec<PromptedExample>,
    pub test: Vec<PromptedExample>,
    /// Walks whose chain duplicated an earlier one.
    pub duplicates: usize,
    /// Chains kept for prompt re-sampling, parallel to `train`.
    train_chains: Vec<TripletChain>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub duplicates: usize,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn counts(&self) -> CorpusCounts {
        CorpusCounts {
            train: self.train.len(),
            valid: self.valid.len(),
            test: self.test.len(),
            duplicates: self.duplicates,
        }
    }

    pub fn examples(&self) -> impl Iterator<Item = &PromptedExample> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    /// Fresh template choices for the training split only; targets and
    /// split membership are unchanged.
    pub fn resample_prompts(&self, epoch_seed: u64) -> Corpus {
        let train = self
            .train_chains
            .iter()
            .map(|chain| prompted(chain, epoch_seed, Split::Train))
            .collect();
        Corpus {
            train,
            valid: self.valid.clone(),
            test: self.test.clone(),
            duplicates: self.duplicates,
            train_chains: self.train_chains.clone(),
        }
    }

    /// Write `train.jsonl`, `valid.jsonl` and `test.jsonl` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, rows) in [("train", &self.train), ("valid", &self.valid), ("test", &self.test)] {
            write_jsonl(&dir.join(format!("{name}.jsonl")), rows.iter())?;
        }
        Ok(())
    }
}

pub fn write_jsonl<'a, T, I>(path: &Path, rows: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let mut out = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Serialize chains into prompted examples and split them 80/10/10.
/// Identical chains are kept once. Membership is decided by ranking
/// examples on a hash of (`split_seed`, id); each split is ordered by id.
pub fn build_corpus<I>(chains: I, split_seed: u64, prompt_seed: u64) -> Result<Corpus>
where
    I: IntoIterator<Item = TripletChain>,
{
    let mut seen = HashSet::new();
    let mut duplicates = 0;
    let mut keyed: Vec<(u64, String, TripletChain)> = Vec::new();
    for chain in chains {
        let id = example_id(&chain.to_string());
        if !seen.insert(id.clone()) {
            duplicates += 1;
            continue;
        }
        keyed.push((keyed_seed(split_seed, &id), id, chain));
    }
    if keyed.is_empty() {
        return Err(Error::EmptyInput("walk stream"));
    }
    keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    let (n_train, n_valid, _) = split_sizes(keyed.len());
    let mut parts: [Vec<(String, TripletChain)>; 3] = Default::default();
    for (rank, (_, id, chain)) in keyed.into_iter().enumerate() {
        let slot = if rank < n_train {
            0
        } else if rank < n_train + n_valid {
            1
        } else {
            2
        };
        parts[slot].push((id, chain));
    }
    for part in &mut parts {
        part.sort_by(|a, b| a.0.cmp(&b.0));
    }
    let [train, valid, test] = parts;
    let train_chains: Vec<TripletChain> = train.into_iter().map(|(_, c)| c).collect();
    let render = |rows: Vec<(String, TripletChain)>, split| rows.iter().map(|(_, c)| prompted(c, prompt_seed, split)).collect();
    Ok(Corpus {
        train: train_chains.iter().map(|c| prompted(c, prompt_seed, Split::Train)).collect(),
        valid: render(valid, Split::Valid),
        test: render(test, Split::Test),
        duplicates,
        train_chains,
    })
}

/// Serialize walks, then [`build_corpus`].
pub fn build_corpus_from_walks(graph: &ConceptGraph, walks: &[Walk], split_seed: u64, prompt_seed: u64) -> Result<Corpus> {
    let chains = walks.iter().map(|w| serialize_walk(graph, w)).collect::<Result<Vec<_>>>()?;
    build_corpus(chains, split_seed, prompt_seed)
}

/// JSON-Lines form of a walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub start: String,
    pub concepts: Vec<String>,
    /// `[head, relation, tail]` in stored orientation.
    pub assertions: Vec<[String; 3]>,
}

impl WalkRecord {
    pub fn new(graph: &ConceptGraph, walk: &Walk) -> Self {
        WalkRecord {
            start: graph.concept(walk.start()).to_string(),
            concepts: walk.concepts.iter().map(|&c| graph.concept(c).to_string()).collect(),
            assertions: walk
                .assertions
                .iter()
                .map(|&a| {
                    let a = graph.assertion(a);
                    [
                        graph.concept(a.head).to_string(),
                        a.relation.name().to_string(),
                        graph.concept(a.tail).to_string(),
                    ]
                })
                .collect(),
        }
    }
}
