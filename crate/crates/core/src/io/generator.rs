//! Synthetic probabilistic graph databases.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::database::Database;
use crate::error::{Error, Result};
use crate::graph::{DetGraph, Label};
use crate::prob::{EdgeEvent, JointTable, ProbGraph};
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborPolicy {
    /// One table per edge.
    Singletons,
    /// Edges grouped into stars around shared vertices.
    Stars,
    /// Edge-disjoint triangles first, remaining edges as stars.
    Triangles,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableMode {
    /// Product of per-edge marginals.
    Independent,
    /// Row masses drawn at random (flat Dirichlet), then normalized.
    RandomCorrelated,
    /// Each row gets the largest of its per-edge masses `p_i` or `1 - p_i`,
    /// then rows are normalized.
    MaxTransform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub graphs: usize,
    pub min_vertices: usize,
    pub max_vertices: usize,
    /// Target edges per vertex; at least a spanning tree is always built.
    pub edge_ratio: f64,
    pub vertex_labels: usize,
    pub edge_labels: usize,
    pub policy: NeighborPolicy,
    pub table_mode: TableMode,
    /// Largest star a table may cover.
    pub max_set_size: usize,
    /// Range of per-edge marginals.
    pub min_prob: f64,
    pub max_prob: f64,
    pub seed: u64,
    pub id_prefix: String,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            graphs: 10,
            min_vertices: 4,
            max_vertices: 7,
            edge_ratio: 1.3,
            vertex_labels: 3,
            edge_labels: 2,
            policy: NeighborPolicy::Stars,
            table_mode: TableMode::MaxTransform,
            max_set_size: 3,
            min_prob: 0.2,
            max_prob: 0.9,
            seed: 1,
            id_prefix: "g".into(),
        }
    }
}

pub fn vertex_label(i: usize) -> Label {
    if i < 26 {
        Label::new(&((b'A' + i as u8) as char).to_string())
    } else {
        Label::new(&format!("V{i}"))
    }
}

pub fn edge_label(i: usize) -> Label {
    if i < 26 {
        Label::new(&((b'a' + i as u8) as char).to_string())
    } else {
        Label::new(&format!("e{i}"))
    }
}

impl GeneratorConfig {
    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.min_vertices < 2 || self.min_vertices > self.max_vertices {
            return bad(format!(
                "vertex range {}..={} must start at 2 or more and be non-empty",
                self.min_vertices, self.max_vertices
            ));
        }
        if self.vertex_labels == 0 || self.edge_labels == 0 {
            return bad("label alphabets must be non-empty".into());
        }
        if !(self.edge_ratio.is_finite() && self.edge_ratio >= 0.0) {
            return bad(format!("edge ratio {} must be non-negative", self.edge_ratio));
        }
        let n = self.max_vertices as f64;
        if self.edge_ratio * n > n * (n - 1.0) / 2.0 {
            return bad(format!(
                "edge ratio {} needs more edges than a simple graph on {} vertices has",
                self.edge_ratio, self.max_vertices
            ));
        }
        if !(0.0..=1.0).contains(&self.min_prob) || !(self.min_prob..=1.0).contains(&self.max_prob) {
            return bad(format!(
                "probability range [{}, {}] must lie in [0, 1]",
                self.min_prob, self.max_prob
            ));
        }
        if self.max_set_size == 0 || self.max_set_size > 8 {
            return bad(format!("max set size {} must be within 1..=8", self.max_set_size));
        }
        Ok(())
    }
}

/// Connected random skeleton: a random spanning tree plus extra edges.
fn skeleton(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> DetGraph {
    let n = rng.random_range(cfg.min_vertices..=cfg.max_vertices);
    let max_edges = n * (n - 1) / 2;
    let m = ((cfg.edge_ratio * n as f64).round() as usize).clamp(n - 1, max_edges);
    let mut g = DetGraph::default();
    for _ in 0..n {
        g.push_vertex(vertex_label(rng.random_range(0..cfg.vertex_labels)));
    }
    for v in 1..n {
        let u = rng.random_range(0..v);
        g.push_edge(u, v, edge_label(rng.random_range(0..cfg.edge_labels)))
            .expect("tree edges are fresh");
    }
    while g.edge_count() < m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && g.edge_between(a, b).is_none() {
            g.push_edge(a, b, edge_label(rng.random_range(0..cfg.edge_labels)))
                .expect("checked fresh");
        }
    }
    g
}

/// Splits the edges into neighbor sets according to the policy.
fn partition(g: &DetGraph, policy: NeighborPolicy, max_set: usize) -> Vec<Vec<usize>> {
    let m = g.edge_count();
    let mut used = vec![false; m];
    let mut sets = Vec::new();
    if policy == NeighborPolicy::Singletons {
        return (0..m).map(|e| vec![e]).collect();
    }
    if policy == NeighborPolicy::Triangles && max_set >= 3 {
        for e in 0..m {
            if used[e] {
                continue;
            }
            let (a, b) = (g.edge(e).a, g.edge(e).b);
            let third = g.neighbors(a).iter().find_map(|&(c, ac)| {
                let bc = g.edge_between(b, c)?;
                (c != b && !used[ac] && !used[bc]).then_some((ac, bc))
            });
            if let Some((ac, bc)) = third {
                for x in [e, ac, bc] {
                    used[x] = true;
                }
                let mut t = vec![e, ac, bc];
                t.sort_unstable();
                sets.push(t);
            }
        }
    }
    let mut by_degree: Vec<usize> = (0..g.vertex_count()).collect();
    by_degree.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    for v in by_degree {
        let mut star: Vec<usize> = g
            .neighbors(v)
            .iter()
            .map(|&(_, e)| e)
            .filter(|&e| !used[e])
            .collect();
        star.sort_unstable();
        for chunk in star.chunks(max_set) {
            for &e in chunk {
                used[e] = true;
            }
            sets.push(chunk.to_vec());
        }
    }
    sets
}

/// Table over `k` edges with marginals `p` under the given mode.
pub fn table_rows(mode: TableMode, p: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let k = p.len();
    let mut rows: Vec<f64> = (0..1usize << k)
        .map(|row| match mode {
            TableMode::Independent => (0..k)
                .map(|i| if row >> i & 1 == 1 { p[i] } else { 1.0 - p[i] })
                .product(),
            TableMode::MaxTransform => (0..k)
                .map(|i| if row >> i & 1 == 1 { p[i] } else { 1.0 - p[i] })
                .fold(0.0, f64::max),
            TableMode::RandomCorrelated => -(1.0 - rng.random::<f64>()).ln(),
        })
        .collect();
    let total: f64 = rows.iter().sum();
    if total > 0.0 {
        for r in &mut rows {
            *r /= total;
        }
    }
    rows
}

pub fn generate_graph(cfg: &GeneratorConfig, id: &str) -> Result<ProbGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, id.as_bytes()));
    let g = skeleton(cfg, &mut rng);
    let sets = partition(&g, cfg.policy, cfg.max_set_size);
    let mut tables = Vec::with_capacity(sets.len());
    for set in sets {
        let p: Vec<f64> = set
            .iter()
            .map(|_| rng.random_range(cfg.min_prob..=cfg.max_prob))
            .collect();
        let rows = table_rows(cfg.table_mode, &p, &mut rng);
        tables.push(JointTable::new(set, rows)?);
    }
    ProbGraph::new(id, g, tables)
}

pub fn generate(cfg: &GeneratorConfig) -> Result<Database> {
    cfg.check()?;
    let graphs = (0..cfg.graphs)
        .map(|i| generate_graph(cfg, &format!("{}{:04}", cfg.id_prefix, i)))
        .collect::<Result<Vec<_>>>()?;
    Database::new(graphs)
}

/// Connected query of up to `edges` edges grown from a random edge of
/// `source`, so that it occurs in `source`'s skeleton.
pub fn sample_query(source: &DetGraph, edges: usize, rng: &mut impl Rng) -> Option<DetGraph> {
    if source.edge_count() == 0 || edges == 0 {
        return None;
    }
    let mut chosen = vec![rng.random_range(0..source.edge_count())];
    let mut touched = vec![false; source.vertex_count()];
    touched[source.edge(chosen[0]).a] = true;
    touched[source.edge(chosen[0]).b] = true;
    while chosen.len() < edges {
        let mut frontier: Vec<usize> = (0..source.edge_count())
            .filter(|e| !chosen.contains(e))
            .filter(|&e| touched[source.edge(e).a] || touched[source.edge(e).b])
            .collect();
        if frontier.is_empty() {
            break;
        }
        frontier.shuffle(rng);
        let e = frontier[0];
        touched[source.edge(e).a] = true;
        touched[source.edge(e).b] = true;
        chosen.push(e);
    }
    let q = source.edge_subgraph(|e| chosen.contains(&e), true);
    // Renumber ids densely so query documents are tidy.
    let labels: Vec<String> = q.vertex_labels().iter().map(|l| l.to_string()).collect();
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let edge_list: Vec<(usize, usize, &str)> = q.edges().iter().map(|e| (e.a, e.b, e.label.as_str())).collect();
    DetGraph::build(&label_refs, &edge_list).ok()
}

/// The same skeletons with every edge made independent, keeping each
/// edge's exact marginal.
pub fn independent_derived(db: &Database) -> Result<Database> {
    let graphs = db
        .graphs()
        .iter()
        .map(|g| {
            let marginals = (0..g.edge_count())
                .map(|e| g.event_prob(&EdgeEvent::all_present([e])))
                .collect::<Result<Vec<f64>>>()?;
            ProbGraph::independent(g.id(), g.skeleton().clone(), &marginals)
        })
        .collect::<Result<Vec<_>>>()?;
    Database::new(graphs)
}
