//! Exact canonical codes for small labeled graphs.
//!
//! The code is the lexicographically smallest row-by-row adjacency encoding
//! over all vertex orderings. Row `k` holds the label rank and degree of the
//! `k`-th vertex followed by the edge cells linking it to vertices `0..k`.
//! Because the row at depth `k` depends only on the first `k + 1` vertices,
//! only the candidates producing the minimal row at each depth can lead to
//! the minimum, which keeps the search small on anything but highly
//! symmetric graphs.

use std::cmp::Ordering;
use std::fmt;

use super::{DetGraph, Label};
use crate::error::{Error, Result};

pub const CANON_VERTEX_CAP: usize = 12;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalCode(Vec<u8>);

impl CanonicalCode {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalCode({})", self.to_hex())
    }
}

struct Canon<'a> {
    g: &'a DetGraph,
    vrank: Vec<u32>,
    /// Edge cell between two vertices: 0 when absent, else 1 + label rank.
    cell: Vec<Vec<u32>>,
    order: Vec<usize>,
    placed: Vec<bool>,
    prefix: Vec<u32>,
    best: Option<Vec<u32>>,
}

impl Canon<'_> {
    fn row(&self, v: usize) -> Vec<u32> {
        let mut r = Vec::with_capacity(self.order.len() + 2);
        r.push(self.vrank[v]);
        r.push(self.g.degree(v) as u32);
        r.extend(self.order.iter().map(|&u| self.cell[u][v]));
        r
    }

    fn search(&mut self) {
        let n = self.g.vertex_count();
        if self.order.len() == n {
            if self.best.as_ref().is_none_or(|b| self.prefix < *b) {
                self.best = Some(self.prefix.clone());
            }
            return;
        }
        let rows: Vec<(usize, Vec<u32>)> = (0..n)
            .filter(|&v| !self.placed[v])
            .map(|v| (v, self.row(v)))
            .collect();
        let min_row = rows.iter().map(|(_, r)| r).min().expect("unplaced vertex").clone();
        for (v, r) in rows {
            if r != min_row {
                continue;
            }
            if let Some(best) = &self.best {
                let start = self.prefix.len();
                let ord = self.prefix[..]
                    .cmp(&best[..start])
                    .then_with(|| r[..].cmp(&best[start..start + r.len()]));
                if ord == Ordering::Greater {
                    // Siblings share this row, so they cannot do better either.
                    break;
                }
            }
            self.placed[v] = true;
            self.order.push(v);
            self.prefix.extend_from_slice(&r);
            self.search();
            self.prefix.truncate(self.prefix.len() - r.len());
            self.order.pop();
            self.placed[v] = false;
        }
    }
}

/// Isomorphism-invariant code: equal codes iff the graphs are isomorphic
/// under a vertex- and edge-label-preserving bijection.
pub fn canonical_code(g: &DetGraph) -> Result<CanonicalCode> {
    let n = g.vertex_count();
    if n > CANON_VERTEX_CAP {
        return Err(Error::CanonicalCap {
            vertices: n,
            cap: CANON_VERTEX_CAP,
        });
    }
    let mut labels: Vec<&Label> = g
        .vertex_labels()
        .iter()
        .chain(g.edges().iter().map(|e| &e.label))
        .collect();
    labels.sort();
    labels.dedup();
    let rank = |l: &Label| labels.binary_search(&l).expect("label collected") as u32;
    let vrank = (0..n).map(|v| rank(g.vertex_label(v))).collect();
    let mut cell = vec![vec![0u32; n]; n];
    for e in g.edges() {
        let c = 1 + rank(&e.label);
        cell[e.a][e.b] = c;
        cell[e.b][e.a] = c;
    }
    let mut canon = Canon {
        g,
        vrank,
        cell,
        order: Vec::with_capacity(n),
        placed: vec![false; n],
        prefix: Vec::new(),
        best: None,
    };
    canon.search();
    let rows = canon.best.unwrap_or_default();

    let mut out = Vec::new();
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(g.edge_count() as u32).to_le_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_le_bytes());
    for l in &labels {
        out.extend_from_slice(&(l.as_str().len() as u32).to_le_bytes());
        out.extend_from_slice(l.as_str().as_bytes());
    }
    for x in rows {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(CanonicalCode(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    #[test]
    fn relabeled_triangles_share_code() {
        let a = DetGraph::build(&["A", "B", "C"], &[(0, 1, "x"), (1, 2, "y"), (2, 0, "z")]).unwrap();
        let b = DetGraph::build(&["C", "A", "B"], &[(1, 2, "x"), (2, 0, "y"), (0, 1, "z")]).unwrap();
        assert_eq!(canonical_code(&a).unwrap(), canonical_code(&b).unwrap());
    }

    #[test]
    fn undirected_symmetry() {
        let ab = single_edge("A", "x", "B");
        let ba = single_edge("B", "x", "A");
        assert_eq!(canonical_code(&ab).unwrap(), canonical_code(&ba).unwrap());
    }

    #[test]
    fn label_difference_changes_code() {
        assert_ne!(
            canonical_code(&single_edge("A", "x", "B")).unwrap(),
            canonical_code(&single_edge("A", "y", "B")).unwrap()
        );
        assert_ne!(
            canonical_code(&triangle("A", "x")).unwrap(),
            canonical_code(&path3("A", "x")).unwrap()
        );
    }

    #[test]
    fn cap_enforced() {
        let labels = vec!["A"; CANON_VERTEX_CAP + 1];
        let g = DetGraph::build(&labels, &[]).unwrap();
        assert!(matches!(canonical_code(&g), Err(Error::CanonicalCap { .. })));
    }
}
