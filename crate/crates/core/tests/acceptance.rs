//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::extract_oracle::{oracle, random_case};
use common::{c, filtered, fixture};
use csforge::codec::parse_chains;
use csforge::corpus::{build_corpus, build_corpus_from_walks, serialize_walk, split_sizes, Template};
use csforge::dialogue::{build_records, read_dialogues};
use csforge::embedding::EmbeddingStore;
use csforge::extract::{extract_pair, extract_set, ConceptSet, ExtractConfig};
use csforge::keywords::KeywordMiner;
use csforge::kg_store::{filter_graph, load_assertions, ConceptGraph, ConceptId};
use csforge::manifest::Manifest;
use csforge::metrics::score;
use csforge::walk::{eligible_starts, generate_walks, sample_walk, transition_distribution, walk_rng, Walk, WalkConfig};
use csforge::{render_chains, Concept, DirectionMode, Relation, Triplet, TripletChain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const RELATION_TABLE: [(&str, &str); 31] = [
    ("RelatedTo", "[related to]"),
    ("FormOf", "[form of]"),
    ("IsA", "[is a]"),
    ("PartOf", "[part of]"),
    ("HasA", "[has a]"),
    ("UsedFor", "[used for]"),
    ("CapableOf", "[capable of]"),
    ("AtLocation", "[typically located at]"),
    ("Causes", "[causes]"),
    ("HasSubevent", "[has subevent of]"),
    ("HasFirstSubevent", "[begins with]"),
    ("HasLastSubevent", "[concludes with]"),
    ("HasPrerequisite", "[has prerequisite]"),
    ("HasProperty", "[has property]"),
    ("MotivatedByGoal", "[motivated by goal]"),
    ("ObstructedBy", "[obstructed by]"),
    ("Desires", "[desires]"),
    ("CreatedBy", "[created by]"),
    ("Synonyms", "[synonym]"),
    ("Antonyms", "[antonym]"),
    ("DistinctFrom", "[distinct from]"),
    ("DerivedFrom", "[derived from]"),
    ("SymbolOf", "[symbolically represents]"),
    ("DefinedAs", "[defined as]"),
    ("MannerOf", "[manner of]"),
    ("LocatedNear", "[located near]"),
    ("HasContext", "[used in context of]"),
    ("SimilarTo", "[similar to]"),
    ("CausesDesire", "[makes someone want]"),
    ("MadeOf", "[made of]"),
    ("ReceivesAction", "[receives the action of]"),
];

fn relation_bijection() -> String {
    assert_eq!(Relation::ALL.len(), RELATION_TABLE.len());
    let mut phrases = HashSet::new();
    for (name, phrase) in RELATION_TABLE {
        let r = Relation::from_name(name).unwrap_or_else(|| panic!("unknown relation {name}"));
        assert_eq!(r.phrase(), phrase, "{name}");
        assert_eq!(r.name(), name);
        assert_eq!(Relation::from_phrase(phrase), Some(r), "{phrase}");
        assert!(phrases.insert(phrase));
    }
    for &r in Relation::ALL {
        assert_eq!(Relation::from_phrase(r.phrase()), Some(r));
        assert_eq!(Relation::from_name(r.name()), Some(r));
    }
    "31/31 pairs round-trip".into()
}

fn graph_of(edges: &[(&str, &str, f64)]) -> ConceptGraph {
    let mut g = ConceptGraph::new();
    for &(a, b, sim) in edges {
        g.add(c(a), Relation::RelatedTo, c(b), 1.0, Some(sim));
    }
    g
}

/// Hop distance from `t` to `x` capped at 2, from the assertion list.
fn brute_distance(g: &ConceptGraph, t: ConceptId, x: ConceptId) -> u8 {
    let linked = |a: ConceptId, b: ConceptId| {
        g.assertions().iter().any(|e| (e.head == a && e.tail == b) || (e.head == b && e.tail == a))
    };
    if t == x {
        0
    } else if linked(t, x) {
        1
    } else {
        2
    }
}

/// Normalized step probabilities by neighbor, computed from scratch.
fn brute_distribution(g: &ConceptGraph, prev: Option<ConceptId>, v: ConceptId, p: f64, q: f64) -> BTreeMap<ConceptId, f64> {
    let mut pi = BTreeMap::new();
    for e in g.assertions() {
        let x = if e.head == v {
            e.tail
        } else if e.tail == v {
            e.head
        } else {
            continue;
        };
        let w = e.sim_weight.unwrap();
        let alpha = match prev.map(|t| brute_distance(g, t, x)) {
            None => 1.0,
            Some(0) => 1.0 / p,
            Some(1) => 1.0,
            Some(_) => 1.0 / q,
        };
        pi.insert(x, alpha * w);
    }
    let z: f64 = pi.values().sum();
    pi.into_iter().filter(|(_, v)| *v > 0.0).map(|(k, v)| (k, v / z)).collect()
}

fn walk_bias() -> String {
    let cfg = WalkConfig::default();
    let worked = graph_of(&[("v", "t", 1.0), ("v", "x1", 1.0), ("v", "x2", 1.0), ("t", "x1", 1.0)]);
    let branchy = graph_of(&[
        ("a", "b", 0.8),
        ("b", "c", 0.3),
        ("b", "d", 0.6),
        ("a", "d", 0.5),
        ("c", "e", 0.9),
        ("d", "e", 0.2),
        ("b", "f", 0.7),
        ("f", "g", 0.0),
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut dense_edges = Vec::new();
    let names: Vec<String> = (0..8).map(|i| format!("n{i}")).collect();
    for i in 0..8 {
        for j in i + 1..8 {
            if rng.random_bool(0.45) || j == i + 1 {
                dense_edges.push((names[i].as_str(), names[j].as_str(), [0.1, 0.35, 0.6, 0.95][rng.random_range(0..4)]));
            }
        }
    }
    let dense = graph_of(&dense_edges);

    let mut seen_d = HashSet::new();
    let mut checked = 0;
    let mut worst = 0.0f64;
    for g in [&worked, &branchy, &dense] {
        assert!(g.concept_count() <= 8);
        for v in 0..g.concept_count() as ConceptId {
            let mut prevs: Vec<Option<ConceptId>> = vec![None];
            prevs.extend(g.adjacency(v).iter().map(|a| Some(a.neighbor)));
            for prev in prevs {
                let expected = brute_distribution(g, prev, v, cfg.p, cfg.q);
                let Some(dist) = transition_distribution(g, prev, v, &cfg) else {
                    assert!(expected.is_empty());
                    continue;
                };
                let got: BTreeMap<ConceptId, f64> = dist.entries.iter().map(|e| (e.concept, e.probability)).collect();
                assert_eq!(got.keys().collect::<Vec<_>>(), expected.keys().collect::<Vec<_>>());
                for (k, p) in &expected {
                    assert!((got[k] - p).abs() <= 1e-12, "analytic {} vs brute {p}", got[k]);
                    if let Some(t) = prev {
                        seen_d.insert(brute_distance(g, t, *k));
                    }
                }
                let mut counts: HashMap<ConceptId, usize> = HashMap::new();
                let n = 100_000;
                let mut rng = ChaCha8Rng::seed_from_u64(checked);
                for _ in 0..n {
                    *counts.entry(dist.pick(rng.random::<f64>()).concept).or_default() += 1;
                }
                for (k, p) in &expected {
                    let freq = counts.get(k).copied().unwrap_or(0) as f64 / n as f64;
                    worst = worst.max((freq - p).abs());
                }
                checked += 1;
            }
        }
    }
    assert_eq!(seen_d, HashSet::from([0, 1, 2]), "fixtures must cover every distance");
    assert!(worst <= 0.01, "empirical deviation {worst}");

    let id = |s: &str| worked.id(&c(s)).unwrap();
    let dist = transition_distribution(&worked, Some(id("t")), id("v"), &cfg).unwrap();
    let prob = |s: &str| dist.entries.iter().find(|e| e.concept == id(s)).unwrap().probability;
    for (name, want) in [("t", 0.2308), ("x1", 0.4615), ("x2", 0.3077)] {
        assert!((prob(name) - want).abs() <= 1e-4, "{name}: {}", prob(name));
    }

    // end to end through the walker: walks t -> v -> ?
    let three = WalkConfig { length: 3, ..cfg };
    let mut tally: HashMap<ConceptId, usize> = HashMap::new();
    for pass in 0..100_000 {
        let w = sample_walk(&worked, id("t"), &three, &mut walk_rng(1, pass, id("t")));
        if w.concepts.get(1) == Some(&id("v")) {
            *tally.entry(w.concepts[2]).or_default() += 1;
        }
    }
    let total: usize = tally.values().sum();
    for (name, want) in [("t", 0.2308), ("x1", 0.4615), ("x2", 0.3077)] {
        let freq = tally.get(&id(name)).copied().unwrap_or(0) as f64 / total as f64;
        assert!((freq - want).abs() <= 0.01, "walker {name}: {freq}");
    }
    format!("{checked} distributions exact, max sampling deviation {worst:.4}, worked example ok")
}

fn filtering() -> String {
    let mut raw = ConceptGraph::new();
    raw.add(c("a"), Relation::RelatedTo, c("b"), 1.0, None);
    raw.add(c("a"), Relation::RelatedTo, c("orth"), 1.0, None);
    raw.add(c("a"), Relation::RelatedTo, c("light"), 0.5, None);
    raw.add(c("a"), Relation::RelatedTo, c("opposed"), 2.0, None);
    raw.add(c("a"), Relation::RelatedTo, c("unknown"), 2.0, None);
    let store = EmbeddingStore::from_vectors(vec![
        ("a", vec![1.0, 0.0]),
        ("b", vec![1.0, 0.5]),
        ("orth", vec![0.0, 1.0]),
        ("light", vec![1.0, 0.0]),
        ("opposed", vec![-0.2, 0.96f64.sqrt()]),
    ])
    .unwrap();
    assert!((store.cosine(&c("a"), &c("opposed")).unwrap() + 0.2).abs() < 1e-12);
    assert_eq!(store.cosine(&c("a"), &c("orth")), Some(0.0));
    let (g, report) = filter_graph(&raw, &store, 1.0, 0.0);
    let kept: HashSet<String> = g.assertions().iter().map(|e| g.concept(e.tail).to_string()).collect();
    assert_eq!(kept, HashSet::from(["b".to_string(), "orth".to_string()]));
    assert_eq!((report.below_weight, report.below_similarity, report.missing_embedding), (1, 1, 1));
    "weight 1.0 and cosine 0.0 kept; weight 0.5, cosine -0.2, no vector dropped".into()
}

fn autobraking_walk(g: &ConceptGraph) -> Walk {
    let names = ["autobraking", "automatic", "auto", "automobile", "car"];
    let concepts: Vec<ConceptId> = names.iter().map(|n| g.id(&c(n)).unwrap()).collect();
    let assertions = concepts.windows(2).map(|w| g.between(w[0], w[1])[0]).collect();
    Walk { concepts, assertions }
}

fn digest_dir(dir: &std::path::Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for name in ["train.jsonl", "valid.jsonl", "test.jsonl"] {
        let bytes = std::fs::read(dir.join(name)).unwrap();
        out.push((name.to_string(), hex::encode(Sha256::digest(&bytes))));
    }
    out
}

fn corpus_build() -> String {
    let (g, _) = load_assertions(&fixture("autobraking_graph.tsv"), "en").unwrap();
    let chain = serialize_walk(&g, &autobraking_walk(&g)).unwrap();
    assert_eq!(
        chain.to_string(),
        "autobraking [related to] automatic, automatic [derived from] auto, auto [related to] automobile, automobile [related to] car"
    );
    let prompts = [
        "<|commonsense|> autobraking [related to]",
        "<|commonsense|> autobraking [related to] automatic,",
        "<|commonsense|> autobraking [related to] automatic, automatic [derived from]",
        "<|commonsense|> autobraking [related to] automatic, automatic [derived from] auto,",
    ];
    for (t, want) in Template::ALL.iter().zip(prompts) {
        assert_eq!(t.render(&chain), want);
    }

    let mut sizes = Vec::new();
    for n in [10usize, 101, 359_421] {
        let chains = (0..n).map(|i| {
            TripletChain::new(vec![Triplet::new(
                Concept::new(&format!("c{i}")).unwrap(),
                Relation::RelatedTo,
                Concept::new(&format!("d{i}")).unwrap(),
            )])
            .unwrap()
        });
        let corpus = build_corpus(chains, 17, 18).unwrap();
        let counts = corpus.counts();
        let exact = (0.8 * n as f64, 0.1 * n as f64, 0.1 * n as f64);
        assert!((counts.train as f64 - exact.0).abs() <= 1.0, "{n}: {counts:?}");
        assert!((counts.valid as f64 - exact.1).abs() <= 1.0, "{n}: {counts:?}");
        assert!((counts.test as f64 - exact.2).abs() <= 1.0, "{n}: {counts:?}");
        assert_eq!(counts.train + counts.valid + counts.test, n);
        assert_eq!((counts.train, counts.valid, counts.test), split_sizes(n));
        sizes.push(format!("{n}->{}/{}/{}", counts.train, counts.valid, counts.test));
    }

    let (g, _) = filtered("surf_graph.tsv", "surf_vectors.txt");
    let run = || {
        let cfg = WalkConfig { seed: 5, ..WalkConfig::default() };
        let walks = generate_walks(&g, &cfg, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        build_corpus_from_walks(&g, &walks, 5, 6).unwrap().write_dir(dir.path()).unwrap();
        digest_dir(dir.path())
    };
    assert_eq!(run(), run());
    format!("chain and 4 prompts verbatim; splits {}; reruns byte-identical", sizes.join(", "))
}

fn extraction() -> String {
    let (g, store) = filtered("surf_graph.tsv", "surf_vectors.txt");
    let cfg = ExtractConfig::default();
    let render = |concepts: &[&str]| extract_set(&g, &store, &ConceptSet::new(concepts).unwrap(), &cfg).render();
    assert_eq!(
        render(&["ocean", "surfer", "surf"]),
        "surfing [has prerequisite] ocean, surfing [related to] surf; surfer [related to] surf;"
    );
    assert_eq!(
        render(&["table", "burger", "eat"]),
        "table [related to] eat; burger [is a] food, food [makes someone want] eat;"
    );
    let mut pairs = 0;
    for seed in 0..100 {
        let (g, store) = random_case(seed);
        assert!(g.concept_count() <= 30);
        let names: Vec<String> = g.concepts().iter().map(|c| c.to_string()).collect();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                let got = extract_pair(&g, &store, &c(a), &c(b), &cfg).chain();
                assert_eq!(got, oracle(&g, &store, a, b, &cfg), "seed {seed} ({a}, {b})");
                pairs += 1;
            }
        }
    }
    format!("both strings exact; {pairs} pairs on 100 graphs match the oracle")
}

fn dialogue_statistics() -> String {
    let (g, store) = filtered("diet_graph.tsv", "diet_vectors.txt");
    let dialogues = read_dialogues(&fixture("diet_dialogues.json")).unwrap();
    let utterances: Vec<String> = dialogues.values().flat_map(|d| d.turns.iter().cloned()).collect();
    let miner = KeywordMiner::with_shipped_data(&utterances, 5).unwrap();
    let (records, stats) = build_records(&dialogues, &g, &store, &miner, &ExtractConfig::default());
    let pcts = [stats.context_only_pct.unwrap(), stats.context_response_pct.unwrap(), stats.both_pct.unwrap()];
    // d1: diet/lose weight in context; diet-healthy, diet-eat across. d2: diet-eat in both.
    assert_eq!(pcts, [25.0, 50.0, 25.0]);
    assert!((pcts.iter().sum::<f64>() - 100.0).abs() <= 0.01);
    let has_diet = records
        .iter()
        .flat_map(|r| &r.cs_chains)
        .any(|ch| ch.to_string() == "diet [has subevent of] lose weight");
    assert!(has_diet);
    format!("{:.2}% / {:.2}% / {:.2}%, diet chain extracted", pcts[0], pcts[1], pcts[2])
}

fn random_concept(rng: &mut ChaCha8Rng, pool: usize) -> Concept {
    let words = rng.random_range(1..=3);
    let text: Vec<String> = (0..words).map(|_| format!("w{}", rng.random_range(0..pool))).collect();
    Concept::new(&text.join(" ")).unwrap()
}

fn random_chain(rng: &mut ChaCha8Rng, pool: usize) -> TripletChain {
    let len = rng.random_range(1..=4);
    let ts = (0..len)
        .map(|_| {
            let rel = Relation::ALL[rng.random_range(0..Relation::ALL.len())];
            Triplet::new(random_concept(rng, pool), rel, random_concept(rng, pool))
        })
        .collect();
    TripletChain::new(ts).unwrap()
}

fn metrics() -> String {
    let lines = [
        "<|commonsense|>: dog [capable of] eat; eat [related to] food;",
        "<|commonsense|>: eat [related to] food; food [typically located at] house;",
    ];
    let mut parsed = parse_chains("");
    for l in lines {
        parsed.extend(parse_chains(l));
    }
    assert_eq!(parsed.triplet_count(), 4);
    assert!(parsed.errors.is_empty(), "{:?}", parsed.errors);

    let (eval, _) = load_assertions(&fixture("eval_graph.tsv"), "en").unwrap();
    let text = std::fs::read_to_string(fixture("eval_generations.txt")).unwrap();
    let mut gen = parse_chains("");
    for l in text.lines() {
        gen.extend(parse_chains(l));
    }
    let report = score(&gen, &eval, DirectionMode::Strict, "eval");
    let shown = (
        format!("{:.2}%", 100.0 * report.concepts_acc.unwrap()),
        format!("{:.2}%", 100.0 * report.assertion_acc.unwrap()),
    );
    assert_eq!((report.total, report.pair_hits, report.assertion_hits), (10, 7, 4));
    assert_eq!(shown, ("70.00%".to_string(), "40.00%".to_string()));

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let mut g = ConceptGraph::new();
        for _ in 0..rng.random_range(1..20) {
            let rel = Relation::ALL[rng.random_range(0..4)];
            g.add(random_concept(&mut rng, 4), rel, random_concept(&mut rng, 4), 1.0, None);
        }
        let chains: Vec<TripletChain> = (0..rng.random_range(1..5)).map(|_| random_chain(&mut rng, 4)).collect();
        let parsed = parse_chains(&render_chains(&chains));
        for mode in [DirectionMode::Strict, DirectionMode::Either] {
            let r = score(&parsed, &g, mode, "random");
            assert!(r.assertion_hits <= r.pair_hits);
            assert!(r.assertion_acc.unwrap() <= r.concepts_acc.unwrap());
        }
    }

    for _ in 0..1000 {
        let chains: Vec<TripletChain> = (0..rng.random_range(1..5)).map(|_| random_chain(&mut rng, 50)).collect();
        let text = render_chains(&chains);
        let back = parse_chains(&text);
        assert!(back.errors.is_empty());
        assert_eq!(back.chains, chains);
        assert_eq!(render_chains(&back.chains), text);
    }
    format!("4 triplets / 0 errors; eval {} / {}; 1000 accuracy sets and 1000 round-trips hold", shown.0, shown.1)
}

fn substituted_statistics() -> String {
    let (g, _) = filtered("surf_graph.tsv", "surf_vectors.txt");
    let cfg = WalkConfig { seed: 11, ..WalkConfig::default() };
    let walks = generate_walks(&g, &cfg, None).unwrap();
    let eligible = eligible_starts(&g, &cfg);
    assert_eq!(walks.len(), cfg.passes * eligible);

    let mut manifest = Manifest::new("walk", &cfg).unwrap();
    let input = fixture("surf_graph.tsv");
    manifest.input(&input).unwrap();
    let expected = hex::encode(Sha256::digest(std::fs::read(&input).unwrap()));
    assert_eq!(manifest.inputs.get(&input.display().to_string()), Some(&expected));
    format!("{} walks = {} passes x {eligible} eligible starts; manifest digests inputs", walks.len(), cfg.passes)
}

type Criterion = (&'static str, Duration, fn() -> String);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("relation bijection", Duration::from_secs(1), relation_bijection),
        ("walk bias correctness", Duration::from_secs(10), walk_bias),
        ("filtering", Duration::from_secs(1), filtering),
        ("corpus build", Duration::from_secs(5), corpus_build),
        ("extraction", Duration::from_secs(30), extraction),
        ("dialogue statistics", Duration::from_secs(5), dialogue_statistics),
        ("metrics", Duration::from_secs(10), metrics),
        ("substituted full-run statistics", Duration::from_secs(5), substituted_statistics),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check));
        let took = start.elapsed();
        let line = match outcome {
            Ok(detail) if took <= budget => format!("PASS  {name} ({:.2}s): {detail}", took.as_secs_f64()),
            Ok(detail) => {
                failed += 1;
                format!("FAIL  {name} ({:.2}s, budget {}s): {detail}", took.as_secs_f64(), budget.as_secs())
            }
            Err(payload) => {
                failed += 1;
                let msg = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                format!("FAIL  {name} ({:.2}s): {msg}", took.as_secs_f64())
            }
        };
        println!("{line}");
    }
    println!("{} of {} criteria passed", 8 - failed, 8);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
