//! Feature selection over a database of skeletons.
//!
//! Seeds are every distinct single vertex and single edge. Larger connected
//! patterns grow one edge at a time, either to a new vertex (forward) or
//! between two existing vertices (backward), using only edge signatures that
//! occur in the database. A pattern is extended only while its plain support
//! frequency stays at or above `beta`; support is anti-monotone, so this
//! loses no admissible feature. Patterns are processed in increasing
//! (vertices, edges, canonical code) order, which places every proper
//! subfeature before its superfeatures.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::database::Database;
use crate::error::{Error, Result};
use crate::graph::{
    canonical_code, distinct_edge_images, subgraph_iso_exists, CanonicalCode, DetGraph, EdgeSet, Label,
    CANON_VERTEX_CAP,
};
use crate::io::PatternDoc;
use crate::sip::{max_weight_clique, CompatibilityGraph, DEFAULT_CLIQUE_CAP, DEFAULT_EMBEDDING_CAP, DEFAULT_MAP_BUDGET};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiningParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Largest feature, in vertices.
    pub max_vertices: usize,
    /// Candidates evaluated before mining stops early.
    pub candidate_cap: usize,
    pub embedding_cap: usize,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            alpha: 0.15,
            beta: 0.15,
            gamma: 0.15,
            max_vertices: 5,
            candidate_cap: 5000,
            embedding_cap: DEFAULT_EMBEDDING_CAP,
        }
    }
}

impl MiningParams {
    fn check(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be non-negative")));
            }
        }
        if self.max_vertices == 0 || self.max_vertices > CANON_VERTEX_CAP {
            return Err(Error::InvalidParameter(format!(
                "max feature vertices {} must be within 1..={CANON_VERTEX_CAP}",
                self.max_vertices
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureDoc", into = "FeatureDoc")]
pub struct Feature {
    pub id: usize,
    pub pattern: DetGraph,
    pub code: CanonicalCode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct FeatureDoc {
    id: usize,
    code: String,
    #[serde(flatten)]
    pattern: PatternDoc,
}

impl From<Feature> for FeatureDoc {
    fn from(f: Feature) -> Self {
        FeatureDoc {
            id: f.id,
            code: f.code.to_hex(),
            pattern: PatternDoc::from_graph(&f.pattern),
        }
    }
}

impl TryFrom<FeatureDoc> for Feature {
    type Error = Error;

    fn try_from(doc: FeatureDoc) -> Result<Self> {
        let pattern = doc.pattern.to_graph()?;
        let code = canonical_code(&pattern)?;
        if code.to_hex() != doc.code {
            return Err(Error::Corrupt(format!(
                "feature {} code does not match its pattern",
                doc.id
            )));
        }
        Ok(Feature {
            id: doc.id,
            pattern,
            code,
        })
    }
}

impl Feature {
    pub fn new(id: usize, pattern: DetGraph) -> Result<Self> {
        let code = canonical_code(&pattern)?;
        Ok(Feature { id, pattern, code })
    }
}

/// Occurrence statistics of one pattern over a database.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    /// Database positions of graphs whose skeleton contains the pattern.
    pub support: Vec<usize>,
    /// Distinct embedding edge images per supporting graph.
    pub embeddings: Vec<usize>,
    /// Largest set of pairwise edge-disjoint images per supporting graph.
    pub disjoint: Vec<usize>,
    /// False when some image scan or disjointness search was cut short.
    pub exact: bool,
}

/// Size of the largest set of pairwise edge-disjoint images, and whether it
/// is known to be optimal.
pub fn max_disjoint_images(images: &[EdgeSet]) -> (usize, bool) {
    let mut cg = CompatibilityGraph::new(vec![1.0; images.len()]);
    for i in 0..images.len() {
        for j in i + 1..images.len() {
            if images[i].is_disjoint(&images[j]) {
                cg.link(i, j);
            }
        }
    }
    let c = max_weight_clique(&cg, DEFAULT_CLIQUE_CAP);
    (c.nodes.len(), c.optimal)
}

/// Largest number of pairwise edge-disjoint embeddings of `f` in `skeleton`.
pub fn max_disjoint_embeddings(f: &DetGraph, skeleton: &DetGraph, cap: usize) -> usize {
    let scan = distinct_edge_images(f, skeleton, cap, DEFAULT_MAP_BUDGET);
    max_disjoint_images(&scan.images).0
}

/// Support of `f` restricted to `within`, with per-graph image statistics.
pub fn feature_stats(f: &DetGraph, db: &Database, within: &[usize], embedding_cap: usize) -> FeatureStats {
    let per_graph: Vec<Option<(usize, usize, bool)>> = within
        .par_iter()
        .map(|&gi| {
            let sk = db.graphs()[gi].skeleton();
            let scan = distinct_edge_images(f, sk, embedding_cap, DEFAULT_MAP_BUDGET);
            if scan.images.is_empty() {
                return None;
            }
            let (disjoint, optimal) = max_disjoint_images(&scan.images);
            Some((scan.images.len(), disjoint, scan.complete && optimal))
        })
        .collect();
    let mut stats = FeatureStats {
        exact: true,
        ..FeatureStats::default()
    };
    for (&gi, r) in within.iter().zip(per_graph) {
        if let Some((ef, ind, exact)) = r {
            stats.support.push(gi);
            stats.embeddings.push(ef);
            stats.disjoint.push(ind);
            stats.exact &= exact;
        }
    }
    stats
}

/// Fraction of the database containing `f` with `|IN| / |Ef| >= alpha`.
pub fn frq(stats: &FeatureStats, db_len: usize, alpha: f64) -> f64 {
    if db_len == 0 {
        return 0.0;
    }
    let qualifying = stats
        .embeddings
        .iter()
        .zip(&stats.disjoint)
        .filter(|&(&ef, &ind)| ef > 0 && ind as f64 / ef as f64 >= alpha)
        .count();
    qualifying as f64 / db_len as f64
}

/// `|intersection of subfeature supports| / |support|`; with no selected
/// proper subfeature the intersection is the whole database.
pub fn dis(support: &[usize], subfeature_supports: &[&[usize]], db_len: usize) -> f64 {
    if support.is_empty() {
        return 0.0;
    }
    let common = match subfeature_supports.split_first() {
        None => db_len,
        Some((first, rest)) => {
            let mut acc: BTreeSet<usize> = first.iter().copied().collect();
            for s in rest {
                let other: HashSet<usize> = s.iter().copied().collect();
                acc.retain(|g| other.contains(g));
            }
            acc.len()
        }
    };
    common as f64 / support.len() as f64
}

#[derive(Clone, Debug, Default)]
pub struct MiningOutcome {
    pub features: Vec<Feature>,
    pub stats: Vec<FeatureStats>,
    pub candidates: usize,
    pub warnings: Vec<String>,
}

type Signature = (Label, Label, Label);

struct Pending {
    pattern: DetGraph,
    /// Graphs that may contain the pattern (support of its parents).
    within: Vec<usize>,
    seed: bool,
}

/// Candidates ordered by (vertices, edges, code), deduplicated by code.
#[derive(Default)]
struct Queue {
    pending: BTreeMap<(usize, usize, CanonicalCode), Pending>,
    seen: HashSet<CanonicalCode>,
}

impl Queue {
    fn push(&mut self, p: DetGraph, within: &[usize], seed: bool) -> Result<()> {
        let code = canonical_code(&p)?;
        let key = (p.vertex_count(), p.edge_count(), code.clone());
        if self.seen.insert(code) {
            let pending = Pending {
                pattern: p,
                within: within.to_vec(),
                seed,
            };
            self.pending.insert(key, pending);
        } else if let Some(pending) = self.pending.get_mut(&key) {
            // Support of a pattern lies within the support of every parent.
            pending.within = intersect_sorted(&pending.within, within);
        }
        Ok(())
    }

    fn pop(&mut self) -> Option<Pending> {
        self.pending.pop_first().map(|(_, p)| p)
    }
}

fn extensions(p: &DetGraph, signatures: &[Signature], max_vertices: usize) -> Vec<DetGraph> {
    let mut out = Vec::new();
    let n = p.vertex_count();
    for i in 0..n {
        let li = p.vertex_label(i);
        if n < max_vertices {
            for (a, b, e) in signatures {
                let mut targets = Vec::with_capacity(2);
                if a == li {
                    targets.push(b);
                }
                if b == li && a != b {
                    targets.push(a);
                }
                for t in targets {
                    let mut g = p.clone();
                    let v = g.push_vertex(t.clone());
                    g.push_edge(i, v, e.clone()).expect("fresh vertex");
                    out.push(g);
                }
            }
        }
        for j in i + 1..n {
            if p.edge_between(i, j).is_some() {
                continue;
            }
            let lj = p.vertex_label(j);
            let (lo, hi) = if li <= lj { (li, lj) } else { (lj, li) };
            for (a, b, e) in signatures {
                if a == lo && b == hi {
                    let mut g = p.clone();
                    g.push_edge(i, j, e.clone()).expect("non-adjacent pair");
                    out.push(g);
                }
            }
        }
    }
    out
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let bs: HashSet<usize> = b.iter().copied().collect();
    a.iter().copied().filter(|x| bs.contains(x)).collect()
}

/// Seeds plus every grown pattern with `frq >= beta` and `dis > gamma`.
pub fn select_features(db: &Database, params: &MiningParams) -> Result<MiningOutcome> {
    params.check()?;
    if db.is_empty() {
        return Err(Error::InvalidParameter("cannot mine features from an empty database".into()));
    }
    let n = db.len();
    let all: Vec<usize> = (0..n).collect();

    let mut vertex_labels: BTreeSet<Label> = BTreeSet::new();
    let mut signatures: BTreeSet<Signature> = BTreeSet::new();
    for g in db.graphs() {
        let sk = g.skeleton();
        vertex_labels.extend(sk.vertex_labels().iter().cloned());
        signatures.extend(sk.edges().iter().map(|e| sk.edge_signature(e)));
    }
    let signatures: Vec<Signature> = signatures.into_iter().collect();

    let mut queue = Queue::default();
    for l in &vertex_labels {
        let mut g = DetGraph::default();
        g.push_vertex(l.clone());
        queue.push(g, &all, true)?;
    }
    if params.max_vertices >= 2 {
        for (a, b, e) in &signatures {
            let mut g = DetGraph::default();
            let u = g.push_vertex(a.clone());
            let v = g.push_vertex(b.clone());
            g.push_edge(u, v, e.clone()).expect("fresh");
            queue.push(g, &all, true)?;
        }
    }

    let mut out = MiningOutcome::default();
    let min_support = params.beta * n as f64;
    while let Some(pending) = queue.pop() {
        out.candidates += 1;
        if out.candidates > params.candidate_cap {
            let covered = out.features.iter().map(|f| f.pattern.vertex_count()).max().unwrap_or(0);
            out.warnings.push(format!(
                "candidate cap of {} reached with {} patterns still queued; features cover up to {} vertices",
                params.candidate_cap,
                queue.pending.len() + 1,
                covered
            ));
            break;
        }
        let p = pending.pattern;
        let stats = feature_stats(&p, db, &pending.within, params.embedding_cap);
        let plain = stats.support.len() as f64;
        let frequent = plain >= min_support && plain > 0.0;
        let admit = pending.seed
            || (frequent && frq(&stats, n, params.alpha) >= params.beta && {
                let subs: Vec<&[usize]> = out
                    .features
                    .iter()
                    .zip(&out.stats)
                    .filter(|(f, _)| {
                        f.pattern.vertex_count() <= p.vertex_count()
                            && f.pattern.edge_count() <= p.edge_count()
                            && (f.pattern.vertex_count(), f.pattern.edge_count()) != (p.vertex_count(), p.edge_count())
                            && subgraph_iso_exists(&f.pattern, &p)
                    })
                    .map(|(_, s)| s.support.as_slice())
                    .collect();
                dis(&stats.support, &subs, n) > params.gamma
            });
        if frequent && p.edge_count() > 0 {
            for child in extensions(&p, &signatures, params.max_vertices) {
                queue.push(child, &stats.support, false)?;
            }
        }
        if admit {
            let id = out.features.len();
            out.features.push(Feature::new(id, p)?);
            out.stats.push(stats);
        }
    }
    Ok(out)
}
