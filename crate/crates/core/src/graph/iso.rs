//! Label-preserving subgraph isomorphism by ordered backtracking.
//!
//! Pattern vertices are matched in a connectivity-first order so that every
//! vertex after a component root has an already-mapped pattern neighbor; its
//! candidates are then the target neighbors of that neighbor's image. A
//! disconnected pattern is matched component by component under a single
//! injective map.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};
use std::ops::ControlFlow;

use super::{DetGraph, EdgeSet, Label};
use crate::error::{Error, Result};

/// One injective, label-preserving map of a pattern into a target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    /// `vertex_map[p]` is the target vertex index for pattern vertex `p`.
    pub vertex_map: Vec<usize>,
    /// Target edge indices covered by the pattern's edges.
    pub edge_image: EdgeSet,
}

#[derive(Clone, Debug, Default)]
pub struct EmbeddingSet {
    pub embeddings: Vec<Embedding>,
    /// Distinct edge images, sorted. Maps differing only by an automorphism
    /// of the pattern collapse to the same image.
    pub images: Vec<EdgeSet>,
}

/// Distinct edge images found by a bounded scan.
#[derive(Clone, Debug, Default)]
pub struct ImageScan {
    pub images: Vec<EdgeSet>,
    pub complete: bool,
}

struct Plan {
    order: Vec<usize>,
    /// For each position in `order`: a previously placed pattern neighbor and
    /// the connecting pattern edge, used to generate candidates.
    anchor: Vec<Option<(usize, usize)>>,
    /// For each position: pattern edges back to earlier positions.
    back_edges: Vec<Vec<(usize, usize)>>,
}

fn plan(pattern: &DetGraph, target: &DetGraph) -> Plan {
    let n = pattern.vertex_count();
    let mut label_freq: HashMap<&Label, usize> = HashMap::new();
    for l in target.vertex_labels() {
        *label_freq.entry(l).or_default() += 1;
    }
    let rarity = |v: usize| label_freq.get(pattern.vertex_label(v)).copied().unwrap_or(0);

    let mut placed = vec![false; n];
    let mut pos = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut anchor = Vec::with_capacity(n);
    while order.len() < n {
        let root = (0..n)
            .filter(|&v| !placed[v])
            .min_by_key(|&v| (rarity(v), Reverse(pattern.degree(v)), v))
            .expect("unplaced vertex exists");
        placed[root] = true;
        pos[root] = order.len();
        order.push(root);
        anchor.push(None);
        // Grow the component greedily: next vertex maximises links to the
        // placed set, then rarity, then degree.
        loop {
            type Key = (usize, Reverse<usize>, usize, Reverse<usize>);
            let mut best: Option<(Key, usize, usize, usize)> = None;
            for &p in &order {
                for &(nb, e) in pattern.neighbors(p) {
                    if placed[nb] {
                        continue;
                    }
                    let links = pattern.neighbors(nb).iter().filter(|(x, _)| placed[*x]).count();
                    let key = (links, Reverse(rarity(nb)), pattern.degree(nb), Reverse(nb));
                    if best.as_ref().is_none_or(|b| key > b.0) {
                        best = Some((key, nb, p, e));
                    }
                }
            }
            match best {
                Some((_, nb, p, e)) => {
                    placed[nb] = true;
                    pos[nb] = order.len();
                    order.push(nb);
                    anchor.push(Some((p, e)));
                }
                None => break,
            }
        }
    }
    let back_edges = order
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            pattern
                .neighbors(v)
                .iter()
                .filter(|(nb, _)| pos[*nb] < k)
                .copied()
                .collect()
        })
        .collect();
    Plan {
        order,
        anchor,
        back_edges,
    }
}

fn label_counts_fit(pattern: &DetGraph, target: &DetGraph) -> bool {
    if pattern.vertex_count() > target.vertex_count() || pattern.edge_count() > target.edge_count() {
        return false;
    }
    let (pc, tc) = (pattern.label_counts(), target.label_counts());
    for (label, n) in &pc.vertices {
        match tc.vertices.binary_search_by(|(l, _)| l.cmp(label)) {
            Ok(i) if tc.vertices[i].1 >= *n => {}
            _ => return false,
        }
    }
    for (sig, n) in &pc.edges {
        match tc.edges.binary_search_by(|(s, _)| s.cmp(sig)) {
            Ok(i) if tc.edges[i].1 >= *n => {}
            _ => return false,
        }
    }
    true
}

struct Search<'a, F> {
    pattern: &'a DetGraph,
    target: &'a DetGraph,
    plan: Plan,
    map: Vec<usize>,
    used: Vec<bool>,
    visit: F,
}

impl<'a, F: FnMut(&[usize]) -> ControlFlow<()>> Search<'a, F> {
    fn feasible(&self, k: usize, p: usize, t: usize) -> bool {
        if self.used[t]
            || self.target.vertex_label(t) != self.pattern.vertex_label(p)
            || self.target.degree(t) < self.pattern.degree(p)
        {
            return false;
        }
        self.plan.back_edges[k].iter().all(|&(q, pe)| {
            match self.target.edge_between(t, self.map[q]) {
                Some(te) => self.target.edge(te).label == self.pattern.edge(pe).label,
                None => false,
            }
        })
    }

    fn run(&mut self, k: usize) -> ControlFlow<()> {
        if k == self.plan.order.len() {
            return (self.visit)(&self.map);
        }
        let p = self.plan.order[k];
        match self.plan.anchor[k] {
            Some((q, pe)) => {
                let tq = self.map[q];
                let plabel = &self.pattern.edge(pe).label;
                let target = self.target;
                for &(t, te) in target.neighbors(tq) {
                    if target.edge(te).label != *plabel || !self.feasible(k, p, t) {
                        continue;
                    }
                    self.descend(k, p, t)?;
                }
            }
            None => {
                for t in 0..self.target.vertex_count() {
                    if self.feasible(k, p, t) {
                        self.descend(k, p, t)?;
                    }
                }
            }
        }
        ControlFlow::Continue(())
    }

    fn descend(&mut self, k: usize, p: usize, t: usize) -> ControlFlow<()> {
        self.map[p] = t;
        self.used[t] = true;
        let r = self.run(k + 1);
        self.used[t] = false;
        self.map[p] = usize::MAX;
        r
    }
}

/// Calls `visit` with every injective label-preserving vertex map of
/// `pattern` into `target` until it returns `Break`. Returns `Break` if the
/// visitor stopped the search.
pub fn for_each_embedding<F>(pattern: &DetGraph, target: &DetGraph, visit: F) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    if pattern.is_empty() {
        let mut visit = visit;
        return visit(&[]);
    }
    if !label_counts_fit(pattern, target) {
        return ControlFlow::Continue(());
    }
    let mut search = Search {
        pattern,
        target,
        plan: plan(pattern, target),
        map: vec![usize::MAX; pattern.vertex_count()],
        used: vec![false; target.vertex_count()],
        visit,
    };
    search.run(0)
}

pub fn subgraph_iso_exists(pattern: &DetGraph, target: &DetGraph) -> bool {
    for_each_embedding(pattern, target, |_| ControlFlow::Break(())).is_break()
}

fn image_of(pattern: &DetGraph, target: &DetGraph, map: &[usize]) -> EdgeSet {
    pattern
        .edges()
        .iter()
        .map(|e| {
            target
                .edge_between(map[e.a], map[e.b])
                .expect("embedding preserves edges")
        })
        .collect()
}

/// Every vertex map of `pattern` into `target`, failing once more than `cap`
/// maps have been found.
pub fn enumerate_embeddings(pattern: &DetGraph, target: &DetGraph, cap: usize) -> Result<EmbeddingSet> {
    let mut embeddings = Vec::new();
    let mut images = BTreeSet::new();
    let mut overflow = false;
    let _ = for_each_embedding(pattern, target, |map| {
        if embeddings.len() == cap {
            overflow = true;
            return ControlFlow::Break(());
        }
        let image = image_of(pattern, target, map);
        images.insert(image.clone());
        embeddings.push(Embedding {
            vertex_map: map.to_vec(),
            edge_image: image,
        });
        ControlFlow::Continue(())
    });
    if overflow {
        return Err(Error::EmbeddingBudget {
            found: embeddings.len(),
            cap,
        });
    }
    Ok(EmbeddingSet {
        embeddings,
        images: images.into_iter().collect(),
    })
}

/// Distinct edge images of `pattern` in `target`, stopping after
/// `image_cap` distinct images or `map_budget` vertex maps.
pub fn distinct_edge_images(
    pattern: &DetGraph,
    target: &DetGraph,
    image_cap: usize,
    map_budget: usize,
) -> ImageScan {
    let mut images = BTreeSet::new();
    let mut maps = 0usize;
    let mut complete = true;
    let _ = for_each_embedding(pattern, target, |map| {
        images.insert(image_of(pattern, target, map));
        maps += 1;
        if images.len() > image_cap || maps >= map_budget {
            complete = false;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });
    ImageScan {
        images: images.into_iter().take(image_cap).collect(),
        complete,
    }
}
