//! Query relaxation and subgraph distance.

use std::collections::BTreeMap;

use super::{canonical_code, subgraph_iso_exists, DetGraph, Label, CANON_VERTEX_CAP};
use crate::error::{Error, Result};

/// Controls edge relabeling during relaxation. Deletions are always used.
#[derive(Clone, Debug, Default)]
pub struct RelaxOptions {
    pub relabel: bool,
    /// Labels a relabeled edge may take.
    pub alphabet: Vec<Label>,
}

/// Graphs obtained from a query by exactly `delta` edge edits, with isolated
/// vertices dropped and isomorphic duplicates removed.
#[derive(Clone, Debug)]
pub struct RelaxedQuerySet {
    pub origin: DetGraph,
    pub delta: usize,
    pub members: Vec<DetGraph>,
}

impl RelaxedQuerySet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// True if some member is subgraph-isomorphic to `g`.
    pub fn any_matches(&self, g: &DetGraph) -> bool {
        self.members.iter().any(|rq| subgraph_iso_exists(rq, g))
    }
}

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Deduplicates isomorphic graphs: by canonical code when the graph is small
/// enough, otherwise by mutual containment (equal sizes plus one-way
/// subgraph isomorphism implies isomorphism).
#[derive(Default)]
struct IsoDedup {
    by_code: BTreeMap<Vec<u8>, DetGraph>,
    large: Vec<DetGraph>,
}

impl IsoDedup {
    fn insert(&mut self, g: DetGraph) {
        if g.vertex_count() <= CANON_VERTEX_CAP {
            let code = canonical_code(&g).expect("within cap");
            self.by_code.entry(code.as_bytes().to_vec()).or_insert(g);
        } else if !self.large.iter().any(|h| {
            h.vertex_count() == g.vertex_count()
                && h.edge_count() == g.edge_count()
                && subgraph_iso_exists(h, &g)
        }) {
            self.large.push(g);
        }
    }

    fn into_members(self) -> Vec<DetGraph> {
        self.by_code.into_values().chain(self.large).collect()
    }
}

pub fn relax_query(q: &DetGraph, delta: usize, opts: &RelaxOptions) -> Result<RelaxedQuerySet> {
    let m = q.edge_count();
    if delta > m {
        return Err(Error::InvalidParameter(format!(
            "relaxation of {delta} edges exceeds the query's {m} edges"
        )));
    }
    let mut dedup = IsoDedup::default();
    combinations(m, delta, |chosen| {
        if !opts.relabel {
            dedup.insert(q.edge_subgraph(|e| !chosen.contains(&e), true));
            return;
        }
        // Each chosen edge is either deleted or relabeled to another label.
        let choices: Vec<Vec<Option<&Label>>> = chosen
            .iter()
            .map(|&e| {
                std::iter::once(None)
                    .chain(
                        opts.alphabet
                            .iter()
                            .filter(|l| **l != q.edge(e).label)
                            .map(Some),
                    )
                    .collect()
            })
            .collect();
        let mut pick = vec![0usize; chosen.len()];
        loop {
            let mut g = q.clone();
            for (i, &e) in chosen.iter().enumerate() {
                if let Some(l) = choices[i][pick[i]] {
                    g = g.with_edge_label(e, l.clone());
                }
            }
            let deleted: Vec<usize> = chosen
                .iter()
                .enumerate()
                .filter(|(i, _)| choices[*i][pick[*i]].is_none())
                .map(|(_, &e)| e)
                .collect();
            dedup.insert(g.edge_subgraph(|e| !deleted.contains(&e), true));
            let mut i = 0;
            while i < pick.len() {
                pick[i] += 1;
                if pick[i] < choices[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == pick.len() {
                break;
            }
        }
    });
    Ok(RelaxedQuerySet {
        origin: q.clone(),
        delta,
        members: dedup.into_members(),
    })
}

/// Relaxation levels `0..=|q|` of one query, computed once and reused for
/// many distance evaluations.
#[derive(Clone, Debug)]
pub struct DistanceOracle {
    levels: Vec<RelaxedQuerySet>,
}

impl DistanceOracle {
    pub fn new(q: &DetGraph, opts: &RelaxOptions) -> Result<Self> {
        let levels = (0..=q.edge_count())
            .map(|d| relax_query(q, d, opts))
            .collect::<Result<_>>()?;
        Ok(DistanceOracle { levels })
    }

    /// Smallest `d` such that some `d`-relaxation of the query embeds in `g`.
    pub fn distance(&self, g: &DetGraph) -> usize {
        self.levels
            .iter()
            .position(|level| level.any_matches(g))
            .unwrap_or(self.levels.len() - 1)
    }

    /// Whether the distance to `g` is at most `d`, stopping at the first
    /// matching level.
    pub fn within(&self, g: &DetGraph, d: usize) -> bool {
        self.levels.iter().take(d + 1).any(|level| level.any_matches(g))
    }

    pub fn level(&self, d: usize) -> &RelaxedQuerySet {
        &self.levels[d]
    }
}

/// `|q| - |mcs(q, g)|` in edges.
pub fn subgraph_distance(q: &DetGraph, g: &DetGraph) -> usize {
    for d in 0..=q.edge_count() {
        let level = relax_query(q, d, &RelaxOptions::default()).expect("d within range");
        if level.any_matches(g) {
            return d;
        }
    }
    q.edge_count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    fn deletions() -> RelaxOptions {
        RelaxOptions::default()
    }

    #[test]
    fn combination_enumeration() {
        let mut seen = Vec::new();
        combinations(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(seen.len(), 6);
        let mut n = 0;
        combinations(3, 0, |c| {
            assert!(c.is_empty());
            n += 1
        });
        assert_eq!(n, 1);
        combinations(3, 3, |c| assert_eq!(c, &[0, 1, 2]));
    }

    #[test]
    fn distinct_label_triangle_has_three_relaxations() {
        let q = DetGraph::build(&["A", "A", "A"], &[(0, 1, "a"), (1, 2, "b"), (2, 0, "c")]).unwrap();
        assert_eq!(relax_query(&q, 1, &deletions()).unwrap().len(), 3);
    }

    #[test]
    fn delta_zero_is_identity() {
        let q = triangle("A", "x");
        let r = relax_query(&q, 0, &deletions()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(
            canonical_code(&r.members[0]).unwrap(),
            canonical_code(&q).unwrap()
        );
    }

    #[test]
    fn symmetric_path_deletions_collapse() {
        let r = relax_query(&path3("A", "x"), 1, &deletions()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.members[0].edge_count(), 1);
        assert_eq!(r.members[0].vertex_count(), 2);
    }

    #[test]
    fn full_relaxation_is_empty_graph() {
        let r = relax_query(&path3("A", "x"), 2, &deletions()).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r.members[0].is_empty());
    }

    #[test]
    fn delta_above_edge_count_rejected() {
        assert!(matches!(
            relax_query(&path3("A", "x"), 3, &deletions()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn relabeling_adds_members() {
        let opts = RelaxOptions {
            relabel: true,
            alphabet: vec![Label::new("x"), Label::new("y")],
        };
        let r = relax_query(&single_edge("A", "x", "B"), 1, &opts).unwrap();
        // deletion -> empty graph; relabel -> A-y-B
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn distances() {
        let tri = triangle("A", "x");
        assert_eq!(subgraph_distance(&tri, &tri), 0);
        assert_eq!(subgraph_distance(&tri, &path3("A", "x")), 1);
        let unrelated = single_edge("C", "x", "D");
        assert_eq!(subgraph_distance(&single_edge("A", "x", "B"), &unrelated), 1);
        let oracle = DistanceOracle::new(&tri, &deletions()).unwrap();
        assert_eq!(oracle.distance(&path3("A", "x")), 1);
        assert_eq!(oracle.distance(&unrelated), 3);
    }
}
