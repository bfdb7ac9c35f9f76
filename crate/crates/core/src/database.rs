//! A database of probabilistic graphs addressed by graph id.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::prob::ProbGraph;

#[derive(Clone, Debug)]
pub struct Database {
    graphs: Vec<ProbGraph>,
    index: HashMap<String, usize>,
}

impl Database {
    pub fn new(graphs: Vec<ProbGraph>) -> Result<Self> {
        let mut index = HashMap::with_capacity(graphs.len());
        for (i, g) in graphs.iter().enumerate() {
            if index.insert(g.id().to_string(), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate graph id `{}`", g.id())));
            }
        }
        Ok(Database { graphs, index })
    }

    pub fn graphs(&self) -> &[ProbGraph] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ProbGraph> {
        self.index.get(id).map(|&i| &self.graphs[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.graphs.iter().map(ProbGraph::id)
    }

    /// SHA-256 over a canonical binary encoding of every graph, its
    /// skeleton and its tables, in database order. Independent of how the
    /// database was serialized.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        let put_str = |h: &mut Sha256, s: &str| {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        };
        h.update((self.graphs.len() as u64).to_le_bytes());
        for g in &self.graphs {
            put_str(&mut h, g.id());
            let sk = g.skeleton();
            h.update((sk.vertex_count() as u64).to_le_bytes());
            for v in 0..sk.vertex_count() {
                h.update(sk.vertex_id(v).to_le_bytes());
                put_str(&mut h, sk.vertex_label(v).as_str());
            }
            h.update((sk.edge_count() as u64).to_le_bytes());
            for e in sk.edges() {
                h.update(e.id.to_le_bytes());
                h.update(sk.vertex_id(e.a).to_le_bytes());
                h.update(sk.vertex_id(e.b).to_le_bytes());
                put_str(&mut h, e.label.as_str());
            }
            h.update((g.tables().len() as u64).to_le_bytes());
            for t in g.tables() {
                h.update((t.edges().len() as u64).to_le_bytes());
                for &e in t.edges() {
                    h.update(sk.edge(e).id.to_le_bytes());
                }
                for p in t.probs() {
                    h.update(p.to_bits().to_le_bytes());
                }
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
