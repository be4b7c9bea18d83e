use csforge::embedding::EmbeddingStore;
use csforge::extract::ExtractConfig;
use csforge::kg_store::{Assertion, ConceptGraph};
use csforge::{Concept, Relation, Triplet, TripletChain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WEIGHTS: [f64; 4] = [1.0, 1.5, 2.0, 3.0];

pub fn random_case(seed: u64) -> (ConceptGraph, EmbeddingStore) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=30);
    let edges = rng.random_range(n..=3 * n);
    let mut g = ConceptGraph::new();
    for _ in 0..edges {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let rel = Relation::ALL[rng.random_range(0..4)];
        let w = WEIGHTS[rng.random_range(0..WEIGHTS.len())];
        g.add(
            Concept::new(&format!("c{a}")).unwrap(),
            rel,
            Concept::new(&format!("c{b}")).unwrap(),
            w,
            None,
        );
    }
    let mut vectors: Vec<(String, Vec<f64>)> = Vec::new();
    for i in 0..n {
        if rng.random_bool(0.9) {
            vectors.push((format!("c{i}"), (0..3).map(|_| rng.random_range(-0.3..1.0)).collect()));
        }
    }
    (g, EmbeddingStore::from_vectors(vectors).unwrap())
}

fn plain_cosine(store: &EmbeddingStore, a: &str, b: &str) -> Option<f64> {
    let (x, y) = (store.token(a)?, store.token(b)?);
    let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    (nx > 0.0 && ny > 0.0).then(|| dot / (nx * ny))
}

fn linking<'g>(g: &'g ConceptGraph, a: &str, b: &str) -> Vec<(usize, &'g Assertion)> {
    g.assertions()
        .iter()
        .enumerate()
        .filter(|(_, x)| {
            let (h, t) = (g.concept(x.head).as_str(), g.concept(x.tail).as_str());
            (h == a && t == b) || (h == b && t == a)
        })
        .collect()
}

type Rank = (std::cmp::Reverse<u64>, &'static str, usize);

fn rank(x: &(usize, &Assertion)) -> Rank {
    (std::cmp::Reverse((x.1.weight * 1000.0) as u64), x.1.relation.name(), x.0)
}

/// Exhaustive search over every concept as a middle and every pair of
/// linking assertions.
pub fn oracle(g: &ConceptGraph, store: &EmbeddingStore, a: &str, b: &str, cfg: &ExtractConfig) -> Option<TripletChain> {
    let triplet = |x: &Assertion| Triplet::new(g.concept(x.head).clone(), x.relation, g.concept(x.tail).clone());
    let direct = linking(g, a, b);
    if let Some(best) = direct.iter().min_by_key(|x| rank(x)) {
        return TripletChain::new(vec![triplet(best.1)]);
    }
    if plain_cosine(store, a, b)? < cfg.pair_threshold {
        return None;
    }
    let mut best: Option<(u64, String, Rank, Rank, TripletChain)> = None;
    for m in g.concepts() {
        let m = m.as_str();
        if m == a || m == b {
            continue;
        }
        let gate = |end: &str| plain_cosine(store, m, end).is_some_and(|s| s > cfg.middle_threshold);
        if !(gate(a) || gate(b)) {
            continue;
        }
        for e1 in linking(g, a, m) {
            for e2 in linking(g, m, b) {
                let sum = ((e1.1.weight + e2.1.weight) * 1000.0) as u64;
                let key = (sum, m.to_string(), rank(&e1), rank(&e2));
                let better = match &best {
                    None => true,
                    Some((s, bm, r1, r2, _)) => {
                        key.0 > *s || (key.0 == *s && (key.1.as_str(), key.2, key.3) < (bm.as_str(), *r1, *r2))
                    }
                };
                if better {
                    let chain = TripletChain::new(vec![triplet(e1.1), triplet(e2.1)]).unwrap();
                    best = Some((key.0, key.1, key.2, key.3, chain));
                }
            }
        }
    }
    best.map(|b| b.4)
}
