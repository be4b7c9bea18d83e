use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use csforge::extract::ExtractConfig;
use csforge::keywords::DEFAULT_K;
use csforge::{DirectionMode, WalkConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub graph: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub commongen: Option<PathBuf>,
    pub dialogues: Option<PathBuf>,
    pub generations: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_weight: f64,
    pub min_sim: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { min_weight: 1.0, min_sim: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub split_seed: u64,
    pub prompt_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeywordConfig {
    pub k: usize,
}

impl Default for KeywordConfig {
    fn default() -> Self {
        KeywordConfig { k: DEFAULT_K }
    }
}

/// Which graph generated triplets are checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EvalGraph {
    #[default]
    Raw,
    Filtered,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub direction: DirectionMode,
    pub graph: EvalGraph,
}

/// Everything a run depends on. Loaded from TOML, then overridden from
/// the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lang: String,
    /// Read at most this many embedding rows.
    pub vocab_limit: Option<usize>,
    pub paths: Paths,
    pub filter: FilterConfig,
    pub walk: WalkConfig,
    pub corpus: CorpusConfig,
    pub extract: ExtractConfig,
    pub keywords: KeywordConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lang: "en".into(),
            vocab_limit: None,
            paths: Paths::default(),
            filter: FilterConfig::default(),
            walk: WalkConfig::default(),
            corpus: CorpusConfig::default(),
            extract: ExtractConfig::default(),
            keywords: KeywordConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.lang.is_empty() {
            bail!("lang must not be empty");
        }
        if !(self.filter.min_weight >= 0.0 && self.filter.min_weight.is_finite()) {
            bail!("filter.min_weight must be a non-negative number, got {}", self.filter.min_weight);
        }
        if !(-1.0..=1.0).contains(&self.filter.min_sim) {
            bail!("filter.min_sim must be within [-1, 1], got {}", self.filter.min_sim);
        }
        if self.keywords.k == 0 {
            bail!("keywords.k must be at least 1");
        }
        self.walk.validate()?;
        self.extract.validate()?;
        Ok(())
    }

    /// Set every seed at once.
    pub fn set_seed(&mut self, seed: u64) {
        self.walk.seed = seed;
        self.corpus.split_seed = seed;
        self.corpus.prompt_seed = seed;
    }
}
