//! Subgraph isomorphism probability: the exact oracle and the bound pair
//! stored in the index.
//!
//! The lower bound treats each embedding as an event (all its edges
//! present), conditions it on the overlapping embeddings being absent, and
//! combines a maximum-weight set of pairwise edge-disjoint embeddings. The
//! upper bound does the same with minimal embedding cuts (all cut edges
//! absent), whose realization rules the feature out.

mod clique;
mod family;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{distinct_edge_images, subgraph_iso_exists, DetGraph};
use crate::prob::{InferenceLimits, ProbGraph};
use crate::seed::derive_seed;

pub use clique::{greedy_clique, max_weight_clique, Clique, CompatibilityGraph, DEFAULT_CLIQUE_CAP};
pub use family::{minimal_transversals, EventFamily, FamilyKind};

pub const DEFAULT_EMBEDDING_CAP: usize = 200;
pub const DEFAULT_CUT_CAP: usize = 500;
pub const DEFAULT_MAP_BUDGET: usize = 200_000;
/// Widest elimination bucket used for one bound conditional.
pub const DEFAULT_CONDITIONAL_WIDTH: usize = 12;
/// Graphs up to this many edges get exact conditionals by enumeration when
/// elimination is too wide.
pub const CONDITIONAL_ENUMERATION_EDGES: usize = 14;

/// Conditionals are clamped below this before the `-ln(1 - p)` transform.
const P_CLAMP: f64 = 1.0 - 1e-12;

/// Monte Carlo sample count guaranteeing relative error `tau` with
/// probability `1 - xi`.
pub fn sample_size(tau: f64, xi: f64) -> usize {
    ((4.0 * (2.0 / xi).ln()) / (tau * tau)).ceil() as usize
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionalMode {
    /// Exact inference, sampling only when the factors are too wide.
    #[default]
    Exact,
    /// Sampling estimates, exact inference only when sampling fails.
    Sample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SipParams {
    pub mode: ConditionalMode,
    pub tau: f64,
    pub xi: f64,
    pub seed: u64,
    pub embedding_cap: usize,
    pub cut_cap: usize,
    pub clique_cap: usize,
    pub map_budget: usize,
    /// Conditionals needing a wider elimination are estimated by sampling.
    pub conditional_width: usize,
}

impl Default for SipParams {
    fn default() -> Self {
        SipParams {
            mode: ConditionalMode::Exact,
            tau: 0.1,
            xi: 0.05,
            seed: 0,
            embedding_cap: DEFAULT_EMBEDDING_CAP,
            cut_cap: DEFAULT_CUT_CAP,
            clique_cap: DEFAULT_CLIQUE_CAP,
            map_budget: DEFAULT_MAP_BUDGET,
            conditional_width: DEFAULT_CONDITIONAL_WIDTH,
        }
    }
}

impl SipParams {
    pub fn sample_size(&self) -> usize {
        sample_size(self.tau, self.xi)
    }
}

/// Probability that `f` is subgraph-isomorphic to a random world of `g`,
/// by enumerating worlds.
pub fn exact_sip(f: &DetGraph, g: &ProbGraph, cap: usize) -> Result<f64> {
    if !subgraph_iso_exists(f, g.skeleton()) {
        return Ok(0.0);
    }
    let skeleton = g.skeleton();
    let mut total = 0.0;
    g.for_each_world(cap, |present, w| {
        if w > 0.0 && subgraph_iso_exists(f, &skeleton.world_graph(present)) {
            total += w;
        }
    })?;
    Ok(total.min(1.0))
}

/// Embedding edge images of `f` in `skeleton`, or its minimal cuts.
pub fn build_event_family(
    f: &DetGraph,
    skeleton: &DetGraph,
    kind: FamilyKind,
    params: &SipParams,
) -> Result<EventFamily> {
    let scan = distinct_edge_images(f, skeleton, params.embedding_cap, params.map_budget);
    match kind {
        FamilyKind::Embedding => Ok(EventFamily::new(kind, scan.images, scan.complete)),
        FamilyKind::Cut => {
            if !scan.complete {
                return Err(Error::FamilyCap {
                    cap: params.embedding_cap,
                });
            }
            let cuts = minimal_transversals(&scan.images, params.cut_cap)?;
            Ok(EventFamily::new(kind, cuts, true))
        }
    }
}

/// Monte Carlo estimate of `Pr(member i | no overlapping member)` from `m`
/// sampled worlds.
pub fn estimate_cond(g: &ProbGraph, family: &EventFamily, i: usize, m: usize, seed: u64) -> Result<f64> {
    if m == 0 || i >= family.len() {
        return Err(Error::InvalidParameter(format!(
            "estimate needs m >= 1 and a valid member (m = {m}, member {i} of {})",
            family.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut n1, mut n2) = (0usize, 0usize);
    for _ in 0..m {
        let w = g.sample_world_with(&mut rng);
        let present = w.as_slice();
        if family.overlaps[i].iter().any(|&j| family.holds(j, present)) {
            continue;
        }
        n2 += 1;
        n1 += family.holds(i, present) as usize;
    }
    if n2 == 0 {
        return Err(Error::EstimationFailure { samples: m });
    }
    Ok(n1 as f64 / n2 as f64)
}

/// One estimate per member from a single shared batch of sampled worlds.
fn estimate_all(g: &ProbGraph, family: &EventFamily, m: usize, seed: u64) -> Vec<Option<f64>> {
    let n = family.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut n1, mut n2) = (vec![0usize; n], vec![0usize; n]);
    let mut holds = vec![false; n];
    for _ in 0..m {
        let w = g.sample_world_with(&mut rng);
        for (i, h) in holds.iter_mut().enumerate() {
            *h = family.holds(i, w.as_slice());
        }
        for i in 0..n {
            if family.overlaps[i].iter().any(|&j| holds[j]) {
                continue;
            }
            n2[i] += 1;
            n1[i] += holds[i] as usize;
        }
    }
    (0..n)
        .map(|i| (n2[i] > 0).then(|| n1[i] as f64 / n2[i] as f64))
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Conditionals {
    values: Vec<f64>,
    sampled: usize,
    zero_conditions: usize,
}

fn family_salt(kind: FamilyKind) -> &'static [u8] {
    match kind {
        FamilyKind::Embedding => b"embedding",
        FamilyKind::Cut => b"cut",
    }
}

fn conditionals(g: &ProbGraph, family: &EventFamily, params: &SipParams) -> Conditionals {
    let seed = derive_seed(params.seed, family_salt(family.kind));
    let m = params.sample_size();
    let mut out = Conditionals::default();
    let limits = InferenceLimits {
        width: params.conditional_width,
        enumerate_edges: CONDITIONAL_ENUMERATION_EDGES,
    };
    let exact = |i: usize, out: &mut Conditionals| -> Option<f64> {
        match g.cond_prob_within(&family.event(i), &family.overlap_events(i), limits) {
            Ok(p) => Some(p),
            Err(Error::ZeroProbabilityCondition) => {
                out.zero_conditions += 1;
                Some(0.0)
            }
            Err(_) => None,
        }
    };
    match params.mode {
        ConditionalMode::Exact => {
            let mut estimates: Option<Vec<Option<f64>>> = None;
            for i in 0..family.len() {
                let p = match exact(i, &mut out) {
                    Some(p) => p,
                    None => {
                        out.sampled += 1;
                        let est = estimates.get_or_insert_with(|| estimate_all(g, family, m, seed));
                        // No usable sample leaves the member without weight.
                        est[i].unwrap_or(0.0)
                    }
                };
                out.values.push(p);
            }
        }
        ConditionalMode::Sample => {
            let est = estimate_all(g, family, m, seed);
            for (i, e) in est.into_iter().enumerate() {
                let p = match e {
                    Some(p) => {
                        out.sampled += 1;
                        p
                    }
                    None => exact(i, &mut out).unwrap_or(0.0),
                };
                out.values.push(p);
            }
        }
    }
    out
}

/// Outcome of one side of the bound computation.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundDetail {
    pub value: f64,
    /// Members combined by the maximum-weight clique.
    pub clique: Vec<usize>,
    pub clique_optimal: bool,
    pub family_size: usize,
    pub family_complete: bool,
    /// Conditionals estimated by sampling instead of exact inference.
    pub sampled: usize,
    /// Members whose conditioning event had probability zero.
    pub zero_conditions: usize,
}

/// Selects the heaviest set of pairwise edge-disjoint members and returns
/// it together with `prod (1 - p_i)` over that set.
fn tighten(family: &EventFamily, conds: &Conditionals, clique_cap: usize) -> (Clique, f64) {
    if let Some(i) = conds.values.iter().position(|&p| p >= P_CLAMP) {
        let clique = Clique {
            nodes: vec![i],
            weight: f64::INFINITY,
            optimal: true,
        };
        return (clique, 0.0);
    }
    let weights = conds.values.iter().map(|&p| -(1.0 - p.clamp(0.0, P_CLAMP)).ln()).collect();
    let mut cg = CompatibilityGraph::new(weights);
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            if family.members[i].is_disjoint(&family.members[j]) {
                cg.link(i, j);
            }
        }
    }
    let clique = max_weight_clique(&cg, clique_cap);
    let complement = clique.nodes.iter().map(|&i| 1.0 - conds.values[i]).product();
    (clique, complement)
}

fn detail(family: &EventFamily, conds: &Conditionals, clique: Clique, value: f64) -> BoundDetail {
    BoundDetail {
        value: value.clamp(0.0, 1.0),
        clique: clique.nodes,
        clique_optimal: clique.optimal,
        family_size: family.len(),
        family_complete: family.complete,
        sampled: conds.sampled,
        zero_conditions: conds.zero_conditions,
    }
}

fn trivial(value: f64, family_size: usize) -> BoundDetail {
    BoundDetail {
        value,
        clique: Vec::new(),
        clique_optimal: true,
        family_size,
        family_complete: true,
        sampled: 0,
        zero_conditions: 0,
    }
}

/// `1 - prod (1 - Pr(Bf_i | no overlapping Bf_j))` over the best clique of
/// edge-disjoint embeddings.
pub fn lower_bound_sip(f: &DetGraph, g: &ProbGraph, params: &SipParams) -> Result<BoundDetail> {
    let family = build_event_family(f, g.skeleton(), FamilyKind::Embedding, params)?;
    if family.is_empty() {
        return Ok(trivial(0.0, 0));
    }
    if family.members.iter().any(|m| m.is_empty()) {
        return Ok(trivial(1.0, family.len()));
    }
    let conds = conditionals(g, &family, params);
    let (clique, complement) = tighten(&family, &conds, params.clique_cap);
    Ok(detail(&family, &conds, clique, 1.0 - complement))
}

/// `prod (1 - Pr(Bc_i | no overlapping Bc_j))` over the best clique of
/// edge-disjoint minimal cuts. Requires the complete cut family.
pub fn upper_bound_sip(f: &DetGraph, g: &ProbGraph, params: &SipParams) -> Result<BoundDetail> {
    let embeddings = build_event_family(f, g.skeleton(), FamilyKind::Embedding, params)?;
    if embeddings.is_empty() {
        return Ok(trivial(0.0, 0));
    }
    if embeddings.members.iter().any(|m| m.is_empty()) {
        return Ok(trivial(1.0, 0));
    }
    if !embeddings.complete {
        return Err(Error::FamilyCap {
            cap: params.embedding_cap,
        });
    }
    let cuts = minimal_transversals(&embeddings.members, params.cut_cap)?;
    let family = EventFamily::new(FamilyKind::Cut, cuts, true);
    let conds = conditionals(g, &family, params);
    let (clique, complement) = tighten(&family, &conds, params.clique_cap);
    Ok(detail(&family, &conds, clique, complement))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundMeta {
    pub embeddings: usize,
    pub embeddings_complete: bool,
    /// Number of minimal cuts, absent when the cut family was not built.
    pub cuts: Option<usize>,
    pub lower_clique: usize,
    pub upper_clique: usize,
    pub cliques_optimal: bool,
    pub sampled_conditionals: usize,
    pub zero_conditions: usize,
    /// Why the upper bound fell back to 1, if it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_fallback: Option<String>,
    /// Set when the computed lower bound exceeded the upper bound and the
    /// upper bound was raised to match.
    #[serde(default)]
    pub widened: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
    pub meta: BoundMeta,
}

/// Both bounds for `f` in `g`, or `None` when `f` does not occur in the
/// skeleton at all. An unbuildable cut family leaves the upper bound at 1.
pub fn bound_pair(f: &DetGraph, g: &ProbGraph, params: &SipParams) -> Result<Option<BoundPair>> {
    if !subgraph_iso_exists(f, g.skeleton()) {
        return Ok(None);
    }
    let lower = lower_bound_sip(f, g, params)?;
    let (upper, fallback) = match upper_bound_sip(f, g, params) {
        Ok(u) => (Some(u), None),
        Err(e @ Error::FamilyCap { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let upper_value = upper.as_ref().map_or(1.0, |u| u.value);
    let widened = lower.value > upper_value;
    let meta = BoundMeta {
        embeddings: lower.family_size,
        embeddings_complete: lower.family_complete,
        cuts: upper.as_ref().map(|u| u.family_size),
        lower_clique: lower.clique.len(),
        upper_clique: upper.as_ref().map_or(0, |u| u.clique.len()),
        cliques_optimal: lower.clique_optimal && upper.as_ref().is_none_or(|u| u.clique_optimal),
        sampled_conditionals: lower.sampled + upper.as_ref().map_or(0, |u| u.sampled),
        zero_conditions: lower.zero_conditions + upper.as_ref().map_or(0, |u| u.zero_conditions),
        upper_fallback: fallback,
        widened,
    };
    Ok(Some(BoundPair {
        lower: lower.value,
        upper: upper_value.max(lower.value),
        meta,
    }))
}
