//! TF-IDF keyword selection with stopword and part-of-speech filtering.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::concept::Concept;
use crate::error::{Error, Result};
use crate::kg_store::ConceptGraph;

const SHIPPED_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const SHIPPED_LEXICON: &str = include_str!("../data/pos_lexicon.tsv");

/// Longest multi-word span matched against graph concepts.
pub const MAX_SPAN_WORDS: usize = 3;

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Pronoun,
    Determiner,
    Preposition,
    Conjunction,
    Auxiliary,
    Interjection,
    Numeral,
}

impl Pos {
    fn from_tag(tag: &str) -> Option<Pos> {
        Some(match tag.trim() {
            "N" => Pos::Noun,
            "V" => Pos::Verb,
            "ADJ" => Pos::Adjective,
            "ADV" => Pos::Adverb,
            "PRON" => Pos::Pronoun,
            "DET" => Pos::Determiner,
            "PREP" => Pos::Preposition,
            "CONJ" => Pos::Conjunction,
            "AUX" => Pos::Auxiliary,
            "INTJ" => Pos::Interjection,
            "NUM" => Pos::Numeral,
            _ => return None,
        })
    }

    /// Content readings kept as keywords.
    pub fn is_content(self) -> bool {
        matches!(self, Pos::Noun | Pos::Verb | Pos::Adjective)
    }
}

/// Word to part-of-speech readings, with suffix rules for unlisted words.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    table: HashMap<String, Vec<Pos>>,
}

impl PosLexicon {
    /// Parse `token<TAB>TAG,TAG` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> std::result::Result<PosLexicon, String> {
        let mut table = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tags) = line.split_once('\t').ok_or_else(|| format!("line {}: missing tab", i + 1))?;
            let tags = tags
                .split(',')
                .map(|t| Pos::from_tag(t).ok_or_else(|| format!("line {}: unknown tag `{t}`", i + 1)))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            table.insert(word.trim().to_lowercase(), tags);
        }
        Ok(PosLexicon { table })
    }

    pub fn shipped() -> PosLexicon {
        PosLexicon::parse(SHIPPED_LEXICON).expect("shipped lexicon parses")
    }

    pub fn load(path: &Path) -> Result<PosLexicon> {
        let text = fs::read_to_string(path).map_err(|source| Error::Ingest {
            path: path.to_path_buf(),
            source,
        })?;
        PosLexicon::parse(&text).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message,
        })
    }

    pub fn readings(&self, word: &str) -> Vec<Pos> {
        if let Some(tags) = self.table.get(word) {
            return tags.clone();
        }
        vec![guess_pos(word)]
    }

    pub fn has_content_reading(&self, word: &str) -> bool {
        self.readings(word).into_iter().any(Pos::is_content)
    }
}

fn guess_pos(word: &str) -> Pos {
    if word.chars().all(|c| c.is_ascii_digit()) {
        return Pos::Numeral;
    }
    let ends = |s: &[&str]| s.iter().any(|suf| word.len() > suf.len() + 2 && word.ends_with(suf));
    if ends(&["ing", "ed", "ize", "ise", "ify"]) {
        Pos::Verb
    } else if ends(&["ly"]) {
        Pos::Adverb
    } else if ends(&["ous", "ful", "ive", "able", "ible", "less", "ic", "ish", "ary"]) {
        Pos::Adjective
    } else {
        Pos::Noun
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn parse(text: &str) -> Stopwords {
        Stopwords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn shipped() -> Stopwords {
        Stopwords::parse(SHIPPED_STOPWORDS)
    }

    pub fn load(path: &Path) -> Result<Stopwords> {
        fs::read_to_string(path)
            .map(|t| Stopwords::parse(&t))
            .map_err(|source| Error::Ingest {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }
}

/// Lowercase word tokens; apostrophes inside a word are kept (`i'm`),
/// everything else that is not alphanumeric separates words.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .replace(['\u{2019}', '\u{2018}'], "'")
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Document frequencies over a corpus where each utterance is a document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub document_count: usize,
    pub doc_frequency: HashMap<String, usize>,
}

impl CorpusStats {
    pub fn build<I, S>(corpus: I) -> Result<CorpusStats>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut stats = CorpusStats::default();
        for doc in corpus {
            stats.document_count += 1;
            let unique: HashSet<String> = tokenize(doc.as_ref()).into_iter().collect();
            for token in unique {
                *stats.doc_frequency.entry(token).or_default() += 1;
            }
        }
        if stats.document_count == 0 {
            return Err(Error::EmptyInput("keyword corpus"));
        }
        Ok(stats)
    }

    pub fn df(&self, token: &str) -> usize {
        self.doc_frequency.get(token).copied().unwrap_or(0)
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df))`.
    pub fn idf(&self, token: &str) -> f64 {
        idf(self.document_count, self.df(token))
    }
}

pub fn idf(n: usize, df: usize) -> f64 {
    ((1.0 + n as f64) / (1.0 + df as f64)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Keyword {
    pub concept: Concept,
    pub score: f64,
    pub in_graph: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KeywordSet {
    /// Best first.
    pub keywords: Vec<Keyword>,
}

impl KeywordSet {
    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.keywords.iter().map(|k| &k.concept)
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }
}

/// Everything needed to pick keywords from an utterance.
#[derive(Debug, Clone)]
pub struct KeywordMiner {
    pub stats: CorpusStats,
    pub lexicon: PosLexicon,
    pub stopwords: Stopwords,
    pub k: usize,
}

impl KeywordMiner {
    /// Miner over `corpus` using the shipped stopwords and lexicon.
    pub fn with_shipped_data<I, S>(corpus: I, k: usize) -> Result<KeywordMiner>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Ok(KeywordMiner {
            stats: CorpusStats::build(corpus)?,
            lexicon: PosLexicon::shipped(),
            stopwords: Stopwords::shipped(),
            k,
        })
    }

    pub fn extract(&self, utterance: &str, graph: Option<&ConceptGraph>) -> KeywordSet {
        extract_keywords(utterance, &self.stats, &self.lexicon, &self.stopwords, self.k, graph)
    }
}

/// Top-`k` keywords of an utterance by `tf * idf`.
///
/// Single words qualify when they are not stopwords and have a noun, verb
/// or adjective reading. With a graph, runs of up to [`MAX_SPAN_WORDS`]
/// words that name a graph concept also qualify if some word in the run
/// does; a run scores with the rarest of its words. Ordering is score
/// descending, then graph concepts first, then alphabetical.
pub fn extract_keywords(
    utterance: &str,
    stats: &CorpusStats,
    lexicon: &PosLexicon,
    stopwords: &Stopwords,
    k: usize,
    graph: Option<&ConceptGraph>,
) -> KeywordSet {
    let tokens = tokenize(utterance);
    let mut tf: HashMap<String, usize> = HashMap::new();
    let mut rarest_df: HashMap<String, usize> = HashMap::new();
    let in_graph = |c: &Concept| graph.is_some_and(|g| g.contains(c));
    let content = |w: &str| !stopwords.contains(w) && lexicon.has_content_reading(w);

    for (i, token) in tokens.iter().enumerate() {
        if content(token) && Concept::new(token).is_ok() {
            *tf.entry(token.clone()).or_default() += 1;
            rarest_df.insert(token.clone(), stats.df(token));
        }
        if graph.is_none() {
            continue;
        }
        for len in 2..=MAX_SPAN_WORDS.min(tokens.len() - i) {
            let words = &tokens[i..i + len];
            if !words.iter().any(|w| content(w)) {
                continue;
            }
            let Ok(concept) = Concept::new(&words.join(" ")) else {
                continue;
            };
            if in_graph(&concept) {
                let df = words.iter().map(|w| stats.df(w)).min().unwrap_or(0);
                *tf.entry(concept.as_str().to_string()).or_default() += 1;
                rarest_df.insert(concept.as_str().to_string(), df);
            }
        }
    }

    let mut keywords: Vec<Keyword> = tf
        .into_iter()
        .map(|(surface, count)| {
            let concept = Concept::new(&surface).expect("validated above");
            let score = count as f64 * idf(stats.document_count, rarest_df[&surface]);
            Keyword {
                in_graph: in_graph(&concept),
                concept,
                score,
            }
        })
        .collect();
    keywords.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.in_graph.cmp(&a.in_graph))
            .then_with(|| a.concept.cmp(&b.concept))
    });
    keywords.truncate(k);
    KeywordSet { keywords }
}
