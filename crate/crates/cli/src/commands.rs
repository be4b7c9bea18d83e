use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use csforge::codec::{parse_chains, ParsedOutput};
use csforge::corpus::{build_corpus_from_walks, write_jsonl, WalkRecord};
use csforge::dialogue::{build_records, read_dialogues, TrainingRow};
use csforge::extract::{build_two_way, read_commongen};
use csforge::keywords::KeywordMiner;
use csforge::kg_store::load_assertions;
use csforge::manifest::Manifest;
use csforge::metrics::{score, AccuracyReport};
use csforge::walk::{eligible_starts, generate_walks};
use log::info;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{EvalGraph, RunConfig};
use crate::graph_cache::{filtered_graph, FilteredGraph};

pub struct Context {
    pub cfg: RunConfig,
    pub data_dir: Option<PathBuf>,
    pub command: &'static str,
    pub out: PathBuf,
    pub cache_dir: Option<PathBuf>,
}

impl Context {
    pub fn new(cfg: RunConfig, data_dir: Option<PathBuf>, command: &'static str, no_cache: bool) -> Result<Context> {
        let out = cfg.paths.out.clone().unwrap_or_else(|| PathBuf::from("csforge-out").join(command));
        let cache_dir = if no_cache {
            None
        } else {
            Some(
                cfg.paths
                    .cache_dir
                    .clone()
                    .or_else(|| data_dir.as_ref().map(|d| d.join(".csforge-cache")))
                    .unwrap_or_else(|| PathBuf::from(".csforge-cache")),
            )
        };
        Ok(Context {
            cfg,
            data_dir,
            command,
            out,
            cache_dir,
        })
    }

    /// Resolve a configured input, relative to the data directory when one
    /// is set, and make sure it exists.
    fn input(&self, path: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
        let Some(path) = path else {
            bail!("no {what} given");
        };
        let resolved = match &self.data_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.clone(),
        };
        if !resolved.is_file() {
            bail!("{what} not found: {}", resolved.display());
        }
        Ok(resolved)
    }

    fn graph_inputs(&self) -> Result<(PathBuf, PathBuf)> {
        Ok((
            self.input(self.cfg.paths.graph.as_ref(), "graph dump")?,
            self.input(self.cfg.paths.embeddings.as_ref(), "embeddings file")?,
        ))
    }

    fn filtered(&self, need_store: bool) -> Result<(FilteredGraph, Vec<PathBuf>)> {
        let (graph, embeddings) = self.graph_inputs()?;
        let fg = filtered_graph(&self.cfg, &graph, &embeddings, self.cache_dir.as_deref(), need_store)?;
        Ok((fg, vec![graph, embeddings]))
    }

    fn prepare_out(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("cannot create output directory {}", self.out.display()))
    }

    fn finish(&self, inputs: &[PathBuf], counts: serde_json::Value) -> Result<()> {
        let mut manifest = Manifest::new(self.command, &self.cfg)?;
        for p in inputs {
            manifest.input(p)?;
        }
        manifest.counts = counts;
        manifest.outputs_in(&self.out)?;
        manifest.write(&self.out.join("manifest.json"))?;
        info!("wrote {}", self.out.display());
        Ok(())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn graph_counts(fg: &FilteredGraph) -> serde_json::Value {
    json!({
        "load": fg.load,
        "filter": fg.filter,
        "concepts": fg.graph.concept_count(),
        "assertions": fg.graph.assertion_count(),
    })
}

pub fn load(ctx: &Context) -> Result<()> {
    let (fg, inputs) = ctx.filtered(false)?;
    ctx.prepare_out()?;
    let counts = graph_counts(&fg);
    write_json(&ctx.out.join("summary.json"), &counts)?;
    println!(
        "{} concepts, {} assertions kept of {} rows ({} below weight, {} without embedding, {} below similarity)",
        fg.graph.concept_count(),
        fg.graph.assertion_count(),
        fg.load.rows,
        fg.filter.below_weight,
        fg.filter.missing_embedding,
        fg.filter.below_similarity
    );
    if let Some(path) = &fg.cache_file {
        println!("snapshot: {}{}", path.display(), if fg.cache_hit { " (cached)" } else { "" });
    }
    ctx.finish(&inputs, counts)
}

pub fn walk(ctx: &Context) -> Result<()> {
    let (fg, inputs) = ctx.filtered(false)?;
    let g = &fg.graph;
    let walk_cfg = ctx.cfg.walk;
    let eligible = eligible_starts(g, &walk_cfg);
    let walks = generate_walks(g, &walk_cfg, None)?;
    info!("{} walks from {eligible} eligible starts", walks.len());
    let corpus = build_corpus_from_walks(g, &walks, ctx.cfg.corpus.split_seed, ctx.cfg.corpus.prompt_seed)?;
    ctx.prepare_out()?;
    write_jsonl(&ctx.out.join("walks.jsonl"), walks.iter().map(|w| WalkRecord::new(g, w)).collect::<Vec<_>>().iter())?;
    corpus.write_dir(&ctx.out)?;
    let c = corpus.counts();
    println!(
        "{} walks ({} passes x {eligible} eligible starts); corpus train {} / valid {} / test {}, {} duplicate chains",
        walks.len(),
        walk_cfg.passes,
        c.train,
        c.valid,
        c.test,
        c.duplicates
    );
    let mut counts = graph_counts(&fg);
    counts["walks"] = json!(walks.len());
    counts["eligible_starts"] = json!(eligible);
    counts["corpus"] = json!(c);
    ctx.finish(&inputs, counts)
}

pub fn extract_commongen(ctx: &Context) -> Result<()> {
    let input = ctx.input(ctx.cfg.paths.commongen.as_ref(), "CommonGen file")?;
    let (fg, mut inputs) = ctx.filtered(true)?;
    let store = fg.store.as_ref().expect("store requested");
    let entries = read_commongen(&input)?;
    let (records, stats) = build_two_way(&entries, &fg.graph, store, &ctx.cfg.extract);
    ctx.prepare_out()?;
    write_jsonl(&ctx.out.join("records.jsonl"), records.iter())?;
    write_json(&ctx.out.join("stats.json"), &stats)?;
    println!(
        "{} entries ({} invalid, {} without triplets); {} pairs, {} records, mean triplets {}",
        stats.entries,
        stats.invalid_entries,
        stats.skipped_empty,
        stats.pairs,
        stats.records,
        stats.mean_triplets.map_or("undefined".to_string(), |m| format!("{m:.2}"))
    );
    inputs.push(input);
    let mut counts = graph_counts(&fg);
    counts["two_way"] = json!(stats);
    ctx.finish(&inputs, counts)
}

pub fn extract_dialogues(ctx: &Context) -> Result<()> {
    let input = ctx.input(ctx.cfg.paths.dialogues.as_ref(), "dialogue file")?;
    let (fg, mut inputs) = ctx.filtered(true)?;
    let store = fg.store.as_ref().expect("store requested");
    let dialogues = read_dialogues(&input)?;
    let utterances = dialogues.values().flat_map(|d| d.turns.iter());
    let miner = KeywordMiner::with_shipped_data(utterances, ctx.cfg.keywords.k)?;
    let (records, stats) = build_records(&dialogues, &fg.graph, store, &miner, &ctx.cfg.extract);
    ctx.prepare_out()?;
    write_jsonl(&ctx.out.join("records.jsonl"), records.iter().map(TrainingRow::from).collect::<Vec<_>>().iter())?;
    write_jsonl(&ctx.out.join("records_full.jsonl"), records.iter())?;
    write_json(&ctx.out.join("stats.json"), &stats)?;
    let pct = |p: Option<f64>| p.map_or("undefined".to_string(), |v| format!("{v:.2}%"));
    println!(
        "{} dialogues ({} skipped), {} records, {} chains: context-only {}, context-response {}, both {}",
        stats.dialogues,
        stats.skipped_dialogues,
        stats.records,
        stats.chains(),
        pct(stats.context_only_pct),
        pct(stats.context_response_pct),
        pct(stats.both_pct)
    );
    inputs.push(input);
    let mut counts = graph_counts(&fg);
    counts["dialogues"] = json!(stats);
    ctx.finish(&inputs, counts)
}

const GENERATION_FIELDS: [&str; 3] = ["generation", "text", "output"];

/// One generation per line. JSON objects contribute their first string
/// field among [`GENERATION_FIELDS`]; other lines are taken verbatim.
fn read_generations(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('{') {
            let value: serde_json::Value =
                serde_json::from_str(trimmed).with_context(|| format!("{}:{}: invalid JSON", path.display(), i + 1))?;
            let field = GENERATION_FIELDS.iter().find_map(|f| value.get(*f).and_then(|v| v.as_str()));
            match field {
                Some(s) => out.push(s.to_string()),
                None => bail!("{}:{}: no generation/text/output field", path.display(), i + 1),
            }
        } else {
            out.push(trimmed.to_string());
        }
    }
    Ok(out)
}

fn parse_file(path: &Path) -> Result<ParsedOutput> {
    let mut parsed = ParsedOutput::default();
    for line in read_generations(path)? {
        parsed.extend(parse_chains(&line));
    }
    Ok(parsed)
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    overall: &'a AccuracyReport,
    files: Vec<(String, AccuracyReport)>,
}

pub fn eval_triplets(ctx: &Context) -> Result<()> {
    if ctx.cfg.paths.generations.is_empty() {
        bail!("no generation files given");
    }
    let files = ctx
        .cfg
        .paths
        .generations
        .iter()
        .map(|p| ctx.input(Some(p), "generation file"))
        .collect::<Result<Vec<_>>>()?;
    let (graph, mut inputs, label) = match ctx.cfg.eval.graph {
        EvalGraph::Raw => {
            let path = ctx.input(ctx.cfg.paths.graph.as_ref(), "graph dump")?;
            let (g, _) = load_assertions(&path, &ctx.cfg.lang)?;
            (g, vec![path], "raw")
        }
        EvalGraph::Filtered => {
            let (fg, inputs) = ctx.filtered(false)?;
            (fg.graph, inputs, "filtered")
        }
    };
    let parsed: Vec<ParsedOutput> = files.par_iter().map(|p| parse_file(p)).collect::<Result<_>>()?;
    let direction = ctx.cfg.eval.direction;
    let per_file: Vec<(String, AccuracyReport)> = files
        .iter()
        .zip(&parsed)
        .map(|(p, out)| (p.display().to_string(), score(out, &graph, direction, label)))
        .collect();
    let mut all = ParsedOutput::default();
    for p in parsed {
        all.extend(p);
    }
    let overall = score(&all, &graph, direction, label);

    ctx.prepare_out()?;
    let mut text = String::new();
    for (name, report) in &per_file {
        writeln!(text, "{name}\n{report}")?;
    }
    if per_file.len() > 1 {
        writeln!(text, "overall\n{overall}")?;
    }
    std::fs::write(ctx.out.join("report.txt"), &text)?;
    write_json(&ctx.out.join("report.json"), &EvalOutput { overall: &overall, files: per_file })?;
    print!("{text}");
    inputs.extend(files);
    ctx.finish(&inputs, json!(overall))
}
