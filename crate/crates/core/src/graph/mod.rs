//! Deterministic labeled graphs.
//!
//! A [`DetGraph`] is the certain skeleton of a probabilistic graph, and also
//! the representation used for queries, relaxed queries and index features.
//! Vertices and edges carry external integer ids (as found in documents) and
//! are addressed internally by dense indices in insertion order.

mod canon;
mod iso;
mod relax;

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use canon::{canonical_code, CanonicalCode, CANON_VERTEX_CAP};
pub use iso::{
    distinct_edge_images, enumerate_embeddings, for_each_embedding, subgraph_iso_exists,
    Embedding, EmbeddingSet, ImageScan,
};
pub use relax::{relax_query, subgraph_distance, DistanceOracle, RelaxOptions, RelaxedQuerySet};

/// Vertex or edge label drawn from the alphabet.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(s: &str) -> Self {
        Label(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::new(s)
    }
}

impl From<String> for Label {
    fn from(s: String) -> Self {
        Label(Arc::from(s))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d).map(Label::from)
    }
}

/// Sorted, duplicate-free set of edge indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeSet(Vec<usize>);

impl EdgeSet {
    pub fn new() -> Self {
        EdgeSet(Vec::new())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, edge: usize) -> bool {
        self.0.binary_search(&edge).is_ok()
    }

    pub fn is_disjoint(&self, other: &EdgeSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.0.len() <= other.0.len() && self.0.iter().all(|e| other.contains(*e))
    }

    pub fn union(&self, other: &EdgeSet) -> EdgeSet {
        self.0.iter().chain(other.0.iter()).copied().collect()
    }

    pub fn insert(&mut self, edge: usize) {
        if let Err(pos) = self.0.binary_search(&edge) {
            self.0.insert(pos, edge);
        }
    }
}

impl FromIterator<usize> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        EdgeSet(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: u32,
    /// Dense index of the first endpoint.
    pub a: usize,
    /// Dense index of the second endpoint.
    pub b: usize,
    pub label: Label,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }
}

/// Undirected, simple, vertex- and edge-labeled graph.
#[derive(Clone, Debug, Default)]
pub struct DetGraph {
    vertex_ids: Vec<u32>,
    vertex_labels: Vec<Label>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
    /// Cleared by every mutation.
    counts: OnceLock<Arc<LabelCounts>>,
}

#[derive(Debug)]
pub(crate) struct LabelCounts {
    pub vertices: Vec<(Label, usize)>,
    pub edges: Vec<((Label, Label, Label), usize)>,
}

impl PartialEq for DetGraph {
    /// Structural equality (same ids, labels and edges in the same order).
    fn eq(&self, other: &Self) -> bool {
        self.vertex_ids == other.vertex_ids
            && self.vertex_labels == other.vertex_labels
            && self.edges == other.edges
    }
}

impl DetGraph {
    /// Builds a graph from `(vertex id, label)` pairs and
    /// `(edge id, endpoint id, endpoint id, label)` tuples, rejecting
    /// duplicate ids, dangling endpoints, self-loops and parallel edges.
    pub fn new<V, E>(vertices: V, edges: E) -> Result<Self>
    where
        V: IntoIterator<Item = (u32, Label)>,
        E: IntoIterator<Item = (u32, u32, u32, Label)>,
    {
        let mut g = DetGraph::default();
        let mut index: HashMap<u32, usize> = HashMap::new();
        for (id, label) in vertices {
            if index.insert(id, g.vertex_ids.len()).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate vertex id {id}")));
            }
            g.push_vertex_with_id(id, label);
        }
        let mut edge_ids = HashSet::new();
        for (id, u, v, label) in edges {
            if !edge_ids.insert(id) {
                return Err(Error::InvalidGraph(format!("duplicate edge id {id}")));
            }
            let a = *index
                .get(&u)
                .ok_or_else(|| Error::InvalidGraph(format!("edge {id} references unknown vertex {u}")))?;
            let b = *index
                .get(&v)
                .ok_or_else(|| Error::InvalidGraph(format!("edge {id} references unknown vertex {v}")))?;
            g.push_edge_with_id(id, a, b, label)?;
        }
        Ok(g)
    }

    /// Convenience constructor: vertex `i` gets id `i`, edge `j` gets id `j`.
    pub fn build(vertex_labels: &[&str], edges: &[(usize, usize, &str)]) -> Result<Self> {
        DetGraph::new(
            vertex_labels
                .iter()
                .enumerate()
                .map(|(i, l)| (i as u32, Label::new(l))),
            edges
                .iter()
                .enumerate()
                .map(|(j, &(a, b, l))| (j as u32, a as u32, b as u32, Label::new(l))),
        )
    }

    fn push_vertex_with_id(&mut self, id: u32, label: Label) -> usize {
        self.counts = OnceLock::new();
        self.vertex_ids.push(id);
        self.vertex_labels.push(label);
        self.adj.push(Vec::new());
        self.vertex_ids.len() - 1
    }

    fn push_edge_with_id(&mut self, id: u32, a: usize, b: usize, label: Label) -> Result<usize> {
        if a == b {
            return Err(Error::InvalidGraph(format!("edge {id} is a self-loop")));
        }
        if a >= self.vertex_count() || b >= self.vertex_count() {
            return Err(Error::InvalidGraph(format!("edge {id} endpoint out of range")));
        }
        if self.edge_between(a, b).is_some() {
            return Err(Error::InvalidGraph(format!(
                "edge {id} duplicates an existing edge between vertices {} and {}",
                self.vertex_ids[a], self.vertex_ids[b]
            )));
        }
        self.counts = OnceLock::new();
        let idx = self.edges.len();
        self.edges.push(Edge { id, a, b, label });
        self.adj[a].push((b, idx));
        self.adj[b].push((a, idx));
        Ok(idx)
    }

    /// Appends a vertex with a fresh id; returns its index.
    pub fn push_vertex(&mut self, label: Label) -> usize {
        let id = self.vertex_ids.iter().max().map_or(0, |m| m + 1);
        self.push_vertex_with_id(id, label)
    }

    /// Appends an edge between two vertex indices with a fresh id.
    pub fn push_edge(&mut self, a: usize, b: usize, label: Label) -> Result<usize> {
        let id = self.edges.iter().map(|e| e.id).max().map_or(0, |m| m + 1);
        self.push_edge_with_id(id, a, b, label)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_ids.is_empty()
    }

    pub fn vertex_id(&self, v: usize) -> u32 {
        self.vertex_ids[v]
    }

    pub fn vertex_label(&self, v: usize) -> &Label {
        &self.vertex_labels[v]
    }

    pub fn vertex_labels(&self) -> &[Label] {
        &self.vertex_labels
    }

    pub fn vertex_index(&self, id: u32) -> Option<usize> {
        self.vertex_ids.iter().position(|&v| v == id)
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_index(&self, id: u32) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// `(neighbor index, edge index)` pairs incident to `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let (from, to) = if self.adj[a].len() <= self.adj[b].len() {
            (a, b)
        } else {
            (b, a)
        };
        self.adj[from].iter().find(|(n, _)| *n == to).map(|(_, e)| *e)
    }

    /// True for the empty graph and for graphs with a single component.
    pub fn is_connected(&self) -> bool {
        if self.vertex_count() <= 1 {
            return true;
        }
        let mut seen = vec![false; self.vertex_count()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &(n, _) in &self.adj[v] {
                if !seen[n] {
                    seen[n] = true;
                    count += 1;
                    queue.push_back(n);
                }
            }
        }
        count == self.vertex_count()
    }

    /// Subgraph keeping the edges for which `keep` holds. Vertex and edge ids
    /// are preserved; isolated vertices are dropped when `drop_isolated` is set.
    pub fn edge_subgraph(&self, keep: impl Fn(usize) -> bool, drop_isolated: bool) -> DetGraph {
        let kept: Vec<usize> = (0..self.edge_count()).filter(|&e| keep(e)).collect();
        let mut used = vec![!drop_isolated; self.vertex_count()];
        if drop_isolated {
            for &e in &kept {
                used[self.edges[e].a] = true;
                used[self.edges[e].b] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.vertex_count()];
        let mut g = DetGraph::default();
        for v in 0..self.vertex_count() {
            if used[v] {
                remap[v] = g.push_vertex_with_id(self.vertex_ids[v], self.vertex_labels[v].clone());
            }
        }
        for e in kept {
            let edge = &self.edges[e];
            g.push_edge_with_id(edge.id, remap[edge.a], remap[edge.b], edge.label.clone())
                .expect("subgraph of a valid graph is valid");
        }
        g
    }

    /// The possible-world graph realised by a presence vector over the edges.
    pub fn world_graph(&self, present: &[bool]) -> DetGraph {
        self.edge_subgraph(|e| present[e], false)
    }

    /// Copy with edge `e` relabeled.
    pub fn with_edge_label(&self, e: usize, label: Label) -> DetGraph {
        let mut g = self.clone();
        g.edges[e].label = label;
        g.counts = OnceLock::new();
        g
    }

    /// Both label multisets, computed once per graph.
    pub(crate) fn label_counts(&self) -> &LabelCounts {
        self.counts.get_or_init(|| {
            Arc::new(LabelCounts {
                vertices: self.vertex_label_counts(),
                edges: self.edge_signature_counts(),
            })
        })
    }

    /// Multiset of vertex labels, sorted.
    pub fn vertex_label_counts(&self) -> Vec<(Label, usize)> {
        count_sorted(self.vertex_labels.iter().cloned())
    }

    /// Multiset of `(endpoint label, endpoint label, edge label)` triples,
    /// endpoint labels ordered, sorted.
    pub fn edge_signature_counts(&self) -> Vec<((Label, Label, Label), usize)> {
        count_sorted(self.edges.iter().map(|e| self.edge_signature(e)))
    }

    pub(crate) fn edge_signature(&self, e: &Edge) -> (Label, Label, Label) {
        let la = self.vertex_labels[e.a].clone();
        let lb = self.vertex_labels[e.b].clone();
        if la <= lb {
            (la, lb, e.label.clone())
        } else {
            (lb, la, e.label.clone())
        }
    }
}

fn count_sorted<T: Ord>(items: impl Iterator<Item = T>) -> Vec<(T, usize)> {
    let mut v: Vec<T> = items.collect();
    v.sort();
    let mut out: Vec<(T, usize)> = Vec::new();
    for item in v {
        match out.last_mut() {
            Some((last, n)) if *last == item => *n += 1,
            _ => out.push((item, 1)),
        }
    }
    out
}
