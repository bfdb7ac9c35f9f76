//! Shared helpers for the integration suites: random instances and
//! brute-force oracles that do not go through the library's search or
//! inference code.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use pgsim_core::database::Database;
use pgsim_core::graph::{DetGraph, EdgeSet};
use pgsim_core::io::generator::{generate, GeneratorConfig, NeighborPolicy, TableMode};
use pgsim_core::prob::ProbGraph;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Small corpus with at most 10 edges per graph and 3 vertex labels.
pub fn small_corpus(graphs: usize, seed: u64, mode: TableMode) -> Database {
    let cfg = GeneratorConfig {
        graphs,
        min_vertices: 4,
        max_vertices: 7,
        edge_ratio: 1.3,
        vertex_labels: 3,
        edge_labels: 1,
        policy: NeighborPolicy::Stars,
        table_mode: mode,
        max_set_size: 3,
        seed,
        id_prefix: format!("s{seed}-"),
        ..GeneratorConfig::default()
    };
    let db = generate(&cfg).expect("generator config is valid");
    assert!(db.graphs().iter().all(|g| g.edge_count() <= 10));
    db
}

/// Corpus cycling through the three table modes.
pub fn mixed_corpus(graphs: usize, seed: u64) -> Vec<ProbGraph> {
    let modes = [TableMode::Independent, TableMode::RandomCorrelated, TableMode::MaxTransform];
    let per = graphs.div_ceil(modes.len());
    let mut out = Vec::new();
    for (i, mode) in modes.into_iter().enumerate() {
        out.extend(small_corpus(per, seed.wrapping_mul(31).wrapping_add(i as u64), mode).graphs().to_vec());
    }
    out.truncate(graphs);
    out
}

/// Random labeled graph with `n` vertices and up to `m` edges.
pub fn random_graph(rng: &mut impl Rng, n: usize, m: usize, vlabels: usize, elabels: usize) -> DetGraph {
    let names = ["A", "B", "C", "D"];
    let enames = ["x", "y", "z"];
    let mut g = DetGraph::default();
    for _ in 0..n {
        g.push_vertex(names[rng.random_range(0..vlabels)].into());
    }
    let mut tries = 0;
    while g.edge_count() < m && tries < 10 * m + 10 {
        tries += 1;
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && g.edge_between(a, b).is_none() {
            g.push_edge(a, b, enames[rng.random_range(0..elabels)].into()).unwrap();
        }
    }
    g
}

/// Random connected pattern drawn from `source` by growing an edge set.
pub fn random_connected_subgraph(rng: &mut impl Rng, source: &DetGraph, edges: usize) -> Option<DetGraph> {
    if source.edge_count() == 0 {
        return None;
    }
    let mut chosen: BTreeSet<usize> = BTreeSet::new();
    chosen.insert(rng.random_range(0..source.edge_count()));
    while chosen.len() < edges {
        let frontier: Vec<usize> = (0..source.edge_count())
            .filter(|e| !chosen.contains(e))
            .filter(|&e| {
                let ed = source.edge(e);
                chosen.iter().any(|&c| {
                    let cd = source.edge(c);
                    cd.a == ed.a || cd.a == ed.b || cd.b == ed.a || cd.b == ed.b
                })
            })
            .collect();
        if frontier.is_empty() {
            break;
        }
        chosen.insert(frontier[rng.random_range(0..frontier.len())]);
    }
    Some(source.edge_subgraph(|e| chosen.contains(&e), true))
}

/// Every injective label-preserving vertex map, found by trying all
/// assignments; returns the number of maps and the distinct edge images.
pub fn brute_embeddings(p: &DetGraph, t: &DetGraph) -> (usize, BTreeSet<EdgeSet>) {
    let mut maps = 0;
    let mut images = BTreeSet::new();
    let mut map = vec![usize::MAX; p.vertex_count()];
    let mut used = vec![false; t.vertex_count()];
    fn rec(
        i: usize,
        p: &DetGraph,
        t: &DetGraph,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        maps: &mut usize,
        images: &mut BTreeSet<EdgeSet>,
    ) {
        if i == p.vertex_count() {
            let mut image = EdgeSet::new();
            for e in p.edges() {
                match t.edge_between(map[e.a], map[e.b]) {
                    Some(te) if t.edge(te).label == e.label => image.insert(te),
                    _ => return,
                }
            }
            *maps += 1;
            images.insert(image);
            return;
        }
        for v in 0..t.vertex_count() {
            if !used[v] && t.vertex_label(v) == p.vertex_label(i) {
                used[v] = true;
                map[i] = v;
                rec(i + 1, p, t, map, used, maps, images);
                used[v] = false;
            }
        }
    }
    rec(0, p, t, &mut map, &mut used, &mut maps, &mut images);
    (maps, images)
}

/// World weights straight from the table rows: `prod rows / Z` for every
/// presence mask.
pub fn world_weights(g: &ProbGraph) -> Vec<(Vec<bool>, f64)> {
    let m = g.edge_count();
    let raw: Vec<(Vec<bool>, f64)> = (0..1u64 << m)
        .map(|mask| {
            let present: Vec<bool> = (0..m).map(|e| mask >> e & 1 == 1).collect();
            let w: f64 = g.tables().iter().map(|t| t.prob_in(&present)).product();
            (present, w)
        })
        .collect();
    let z: f64 = raw.iter().map(|(_, w)| w).sum();
    raw.into_iter().map(|(p, w)| (p, w / z)).collect()
}

/// Probability mass of the worlds satisfying `pred`.
pub fn mass(g: &ProbGraph, pred: impl Fn(&[bool]) -> bool) -> f64 {
    world_weights(g).iter().filter(|(p, _)| pred(p)).map(|(_, w)| w).sum()
}

/// Minimal transversals by checking every edge subset of the ground set.
pub fn brute_transversals(family: &[EdgeSet]) -> BTreeSet<EdgeSet> {
    let ground: Vec<usize> = family
        .iter()
        .flat_map(|s| s.iter())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(ground.len() <= 16, "ground set too large for brute force");
    let hits = |s: &EdgeSet| family.iter().all(|f| !f.is_disjoint(s));
    let mut out = BTreeSet::new();
    for mask in 0u32..1 << ground.len() {
        let s: EdgeSet = (0..ground.len()).filter(|i| mask >> i & 1 == 1).map(|i| ground[i]).collect();
        if !hits(&s) {
            continue;
        }
        let minimal = s.iter().all(|drop| {
            let smaller: EdgeSet = s.iter().filter(|&e| e != drop).collect();
            !hits(&smaller)
        });
        if minimal {
            out.insert(s);
        }
    }
    out
}
