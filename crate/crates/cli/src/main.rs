mod commands;
mod config;
mod graph_cache;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use csforge::DirectionMode;

use crate::config::{EvalGraph, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "csforge", version, about = "Build commonsense training data from a ConceptNet-style graph")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory that relative input paths are resolved against.
    #[arg(long, global = true, env = "CSFORGE_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Output directory for this command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for walks, splits and prompt templates.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Graph snapshot cache directory.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Always rebuild the filtered graph.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
pub struct GraphArgs {
    /// Assertion dump (ConceptNet CSV or head/relation/tail/weight TSV).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Word vectors in GloVe text format.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    lang: Option<String>,
    #[arg(long)]
    min_weight: Option<f64>,
    #[arg(long)]
    min_sim: Option<f64>,
    #[arg(long)]
    vocab_limit: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct ExtractArgs {
    #[arg(long)]
    pair_threshold: Option<f64>,
    #[arg(long)]
    middle_threshold: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest and filter the graph, then cache an indexed snapshot.
    Load {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Sample biased walks and build the prompted corpus.
    Walk {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        /// Maximum concepts per walk.
        #[arg(long)]
        length: Option<usize>,
        #[arg(long)]
        passes: Option<usize>,
    },
    /// Build two-way records from CommonGen-style concept sets.
    ExtractCommongen {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        extract: ExtractArgs,
        /// JSON-Lines file of {"concepts", "sentences"} entries.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Build dialogue records with extracted commonsense.
    ExtractDialogues {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        extract: ExtractArgs,
        /// JSON object of dialogues keyed by id.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Keywords kept per utterance.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Score generated triplets against the graph.
    EvalTriplets {
        #[command(flatten)]
        graph: GraphArgs,
        /// Generation files, plain text or JSON-Lines.
        #[arg(long = "input", num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        direction: Option<DirectionArg>,
        /// Check against the raw or the filtered graph.
        #[arg(long, value_enum)]
        against: Option<EvalGraph>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum DirectionArg {
    Strict,
    Either,
}

impl From<DirectionArg> for DirectionMode {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Strict => DirectionMode::Strict,
            DirectionArg::Either => DirectionMode::Either,
        }
    }
}

fn apply_graph_args(cfg: &mut RunConfig, a: &GraphArgs) {
    if let Some(p) = &a.graph {
        cfg.paths.graph = Some(p.clone());
    }
    if let Some(p) = &a.embeddings {
        cfg.paths.embeddings = Some(p.clone());
    }
    if let Some(l) = &a.lang {
        cfg.lang = l.clone();
    }
    if let Some(v) = a.min_weight {
        cfg.filter.min_weight = v;
    }
    if let Some(v) = a.min_sim {
        cfg.filter.min_sim = v;
    }
    if a.vocab_limit.is_some() {
        cfg.vocab_limit = a.vocab_limit;
    }
}

fn apply_extract_args(cfg: &mut RunConfig, a: &ExtractArgs) {
    if let Some(v) = a.pair_threshold {
        cfg.extract.pair_threshold = v;
    }
    if let Some(v) = a.middle_threshold {
        cfg.extract.middle_threshold = v;
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.paths.out = Some(out.clone());
    }
    if let Some(dir) = &cli.cache_dir {
        cfg.paths.cache_dir = Some(dir.clone());
    }
    let name = match &cli.command {
        Command::Load { graph } => {
            apply_graph_args(&mut cfg, graph);
            "load"
        }
        Command::Walk { graph, p, q, length, passes } => {
            apply_graph_args(&mut cfg, graph);
            cfg.walk.p = p.unwrap_or(cfg.walk.p);
            cfg.walk.q = q.unwrap_or(cfg.walk.q);
            cfg.walk.length = length.unwrap_or(cfg.walk.length);
            cfg.walk.passes = passes.unwrap_or(cfg.walk.passes);
            "walk"
        }
        Command::ExtractCommongen { graph, extract, input } => {
            apply_graph_args(&mut cfg, graph);
            apply_extract_args(&mut cfg, extract);
            if input.is_some() {
                cfg.paths.commongen = input.clone();
            }
            "extract-commongen"
        }
        Command::ExtractDialogues { graph, extract, input, k } => {
            apply_graph_args(&mut cfg, graph);
            apply_extract_args(&mut cfg, extract);
            if input.is_some() {
                cfg.paths.dialogues = input.clone();
            }
            cfg.keywords.k = k.unwrap_or(cfg.keywords.k);
            "extract-dialogues"
        }
        Command::EvalTriplets { graph, inputs, direction, against } => {
            apply_graph_args(&mut cfg, graph);
            if !inputs.is_empty() {
                cfg.paths.generations = inputs.clone();
            }
            if let Some(d) = direction {
                cfg.eval.direction = (*d).into();
            }
            cfg.eval.graph = against.unwrap_or(cfg.eval.graph);
            "eval-triplets"
        }
    };
    cfg.validate().context("invalid configuration")?;

    let ctx = commands::Context::new(cfg, cli.data_dir, name, cli.no_cache)?;
    let job = || match name {
        "load" => commands::load(&ctx),
        "walk" => commands::walk(&ctx),
        "extract-commongen" => commands::extract_commongen(&ctx),
        "extract-dialogues" => commands::extract_dialogues(&ctx),
        _ => commands::eval_triplets(&ctx),
    };
    match cli.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot start worker pool")?
            .install(job),
        None => job(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
