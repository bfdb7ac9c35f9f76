//! Probabilistic graphs with correlated edges.
//!
//! Each graph carries joint probability tables over neighbor-edge sets. A
//! world's weight is the product of the matching table rows divided by the
//! normalization constant `Z`, the sum of that product over all worlds.
//! Tables that partition the edges give `Z = 1`; overlapping tables with
//! inconsistent marginals do not, and are normalized instead of rejected.

mod factor;

use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DetGraph, EdgeSet};
use factor::{eliminate, eliminate_total, Elimination, Factor};

/// Largest number of edges exhaustive world enumeration accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 20;

/// Largest factor scope exact inference will build.
pub const INFERENCE_WIDTH_LIMIT: usize = 20;

/// Largest neighbor-edge set a single table may cover.
pub const MAX_TABLE_EDGES: usize = 20;

/// Oracle cap from `PGSIM_ORACLE_CAP`, falling back to the default.
pub fn oracle_cap_from_env() -> usize {
    std::env::var("PGSIM_ORACLE_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ORACLE_CAP)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    /// Allowed deviation of a table's row sum from 1.
    pub row_sum: f64,
    /// Deviation of `Z` from 1 above which a warning is recorded.
    pub normalization: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            row_sum: 1e-9,
            normalization: 1e-6,
        }
    }
}

/// Joint distribution over the presence of a neighbor-edge set. Row `r`
/// gives the probability of the assignment where edge `edges[i]` is present
/// iff bit `i` of `r` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    edges: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(edges: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if edges.is_empty() || edges.len() > MAX_TABLE_EDGES {
            return Err(Error::InvalidParameter(format!(
                "a joint table covers 1 to {MAX_TABLE_EDGES} edges, got {}",
                edges.len()
            )));
        }
        if probs.len() != 1 << edges.len() {
            return Err(Error::InvalidParameter(format!(
                "table over {} edges needs {} rows, got {}",
                edges.len(),
                1usize << edges.len(),
                probs.len()
            )));
        }
        Ok(JointTable { edges, probs })
    }

    /// Table of a single edge present with probability `p`.
    pub fn bernoulli(edge: usize, p: f64) -> Self {
        JointTable {
            edges: vec![edge],
            probs: vec![1.0 - p, p],
        }
    }

    /// Product of independent per-edge marginals.
    pub fn independent(edges: Vec<usize>, marginals: &[f64]) -> Result<Self> {
        let probs = (0..1usize << edges.len())
            .map(|row| {
                marginals
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| if row >> i & 1 == 1 { p } else { 1.0 - p })
                    .product()
            })
            .collect();
        JointTable::new(edges, probs)
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of the row matching the given presence vector.
    pub fn prob_in(&self, present: &[bool]) -> f64 {
        let mut row = 0usize;
        for (i, &e) in self.edges.iter().enumerate() {
            if present[e] {
                row |= 1 << i;
            }
        }
        self.probs[row]
    }

    /// Marginal probability that `edge` (a member of this table) is present.
    pub fn marginal(&self, edge: usize) -> Option<f64> {
        let i = self.edges.iter().position(|&e| e == edge)?;
        Some(
            self.probs
                .iter()
                .enumerate()
                .filter(|(row, _)| row >> i & 1 == 1)
                .map(|(_, p)| p)
                .sum(),
        )
    }

    fn factor(&self) -> Factor {
        Factor::from_unsorted(&self.edges, &self.probs)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub normalizer: f64,
    pub warnings: Vec<String>,
}

/// Presence value for every skeleton edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WorldAssignment {
    present: Vec<bool>,
}

impl WorldAssignment {
    pub fn new(present: Vec<bool>) -> Self {
        WorldAssignment { present }
    }

    /// World where edge `i` is present iff bit `i` of `mask` is set.
    pub fn from_mask(mask: u64, edges: usize) -> Self {
        WorldAssignment {
            present: (0..edges).map(|i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn present(&self, edge: usize) -> bool {
        self.present[edge]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.present
    }

    pub fn present_count(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventMode {
    AllPresent,
    AllAbsent,
}

/// All listed edges present, or all listed edges absent.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeEvent {
    pub mode: EventMode,
    pub edges: EdgeSet,
}

impl EdgeEvent {
    pub fn all_present(edges: impl IntoIterator<Item = usize>) -> Self {
        EdgeEvent {
            mode: EventMode::AllPresent,
            edges: edges.into_iter().collect(),
        }
    }

    pub fn all_absent(edges: impl IntoIterator<Item = usize>) -> Self {
        EdgeEvent {
            mode: EventMode::AllAbsent,
            edges: edges.into_iter().collect(),
        }
    }

    fn wanted(&self) -> bool {
        self.mode == EventMode::AllPresent
    }

    pub fn holds(&self, present: &[bool]) -> bool {
        let want = self.wanted();
        self.edges.iter().all(|e| present[e] == want)
    }

    fn evidence(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        let want = self.wanted();
        self.edges.iter().map(move |e| (e, want))
    }
}

#[derive(Clone, Debug)]
enum WorldSampler {
    Buckets(Elimination),
    /// Cumulative world weights indexed by presence mask.
    Cumulative(Vec<f64>),
}

impl WorldSampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, edges: usize) -> WorldAssignment {
        match self {
            WorldSampler::Buckets(run) => WorldAssignment::new(run.sample(rng)),
            WorldSampler::Cumulative(cdf) => {
                let total = *cdf.last().expect("non-empty");
                let u = rng.random::<f64>() * total;
                let mask = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                WorldAssignment::from_mask(mask as u64, edges)
            }
        }
    }
}

/// Draws worlds from the distribution conditioned on one event.
#[derive(Clone, Debug)]
pub struct ConditionalSampler {
    sampler: WorldSampler,
    edges: usize,
}

impl ConditionalSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WorldAssignment {
        self.sampler.draw(rng, self.edges)
    }
}

#[derive(Clone, Debug)]
pub struct ProbGraph {
    id: String,
    skeleton: DetGraph,
    tables: Vec<JointTable>,
    report: ValidationReport,
    sampler: OnceLock<WorldSampler>,
}

/// Checks the tables against the skeleton and computes the normalization
/// constant. Structural problems are errors; an unnormalized product is a
/// warning.
pub fn validate(
    id: &str,
    skeleton: &DetGraph,
    tables: &[JointTable],
    tol: Tolerance,
) -> Result<ValidationReport> {
    let m = skeleton.edge_count();
    let mut covered = vec![false; m];
    for (t, table) in tables.iter().enumerate() {
        let mut seen = table.edges.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != table.edges.len() {
            return Err(Error::prob_graph(id, format!("table {t} repeats an edge")));
        }
        if let Some(&e) = seen.iter().find(|&&e| e >= m) {
            return Err(Error::prob_graph(
                id,
                format!("table {t} refers to edge index {e}, skeleton has {m} edges"),
            ));
        }
        if !is_neighbor_set(skeleton, &seen) {
            return Err(Error::prob_graph(
                id,
                format!("table {t} edges neither share a vertex nor form a triangle"),
            ));
        }
        if let Some(p) = table.probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::prob_graph(id, format!("table {t} has invalid probability {p}")));
        }
        let sum: f64 = table.probs.iter().sum();
        if (sum - 1.0).abs() > tol.row_sum {
            return Err(Error::prob_graph(id, format!("table {t} rows sum to {sum}")));
        }
        for &e in &seen {
            covered[e] = true;
        }
    }
    if let Some(e) = covered.iter().position(|c| !c) {
        return Err(Error::prob_graph(
            id,
            format!("edge {} is not covered by any table", skeleton.edge(e).id),
        ));
    }

    let all: Vec<&JointTable> = tables.iter().collect();
    let normalizer = total_mass(&all, m, &[], &[], InferenceLimits::default())?;
    if normalizer <= 0.0 {
        return Err(Error::prob_graph(id, "every world has weight zero"));
    }
    let mut warnings = Vec::new();
    if (normalizer - 1.0).abs() > tol.normalization {
        warnings.push(format!(
            "graph `{id}`: product of table rows sums to {normalizer:.9} over all worlds; weights are divided by it"
        ));
    }
    Ok(ValidationReport {
        normalizer,
        warnings,
    })
}

fn is_neighbor_set(skeleton: &DetGraph, edges: &[usize]) -> bool {
    if edges.len() == 1 {
        return true;
    }
    let first = skeleton.edge(edges[0]);
    let shared = [first.a, first.b].into_iter().any(|v| {
        edges.iter().all(|&e| {
            let ed = skeleton.edge(e);
            ed.a == v || ed.b == v
        })
    });
    if shared {
        return true;
    }
    if edges.len() != 3 {
        return false;
    }
    let mut vs: Vec<usize> = edges
        .iter()
        .flat_map(|&e| [skeleton.edge(e).a, skeleton.edge(e).b])
        .collect();
    vs.sort_unstable();
    vs.dedup();
    vs.len() == 3
}

/// Budget for one exact inference: the widest elimination bucket allowed,
/// and the largest graph that may be enumerated when elimination is too wide.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InferenceLimits {
    pub width: usize,
    pub enumerate_edges: usize,
}

impl Default for InferenceLimits {
    fn default() -> Self {
        InferenceLimits {
            width: INFERENCE_WIDTH_LIMIT,
            enumerate_edges: oracle_cap_from_env(),
        }
    }
}

/// Unnormalized mass of the worlds satisfying `evidence` while avoiding every
/// event in `forbidden`. Exact elimination first, enumeration when the
/// factors are too wide but the graph is small.
fn total_mass(
    tables: &[&JointTable],
    m: usize,
    evidence: &[(usize, bool)],
    forbidden: &[&EdgeEvent],
    limits: InferenceLimits,
) -> Result<f64> {
    match eliminate_total(factors_of(tables, forbidden), evidence, m, limits.width) {
        Ok(total) => Ok(total),
        Err(Error::InferenceBudget { .. }) if m <= limits.enumerate_edges => {
            let mut total = 0.0;
            for_each_mask(m, |present| {
                let ok = evidence.iter().all(|&(e, v)| present[e] == v)
                    && forbidden.iter().all(|ev| !ev.holds(present));
                if ok {
                    total += raw_product(tables.iter().copied(), present);
                }
            });
            Ok(total)
        }
        Err(e) => Err(e),
    }
}

fn run_elimination(
    tables: &[&JointTable],
    m: usize,
    evidence: &[(usize, bool)],
    forbidden: &[&EdgeEvent],
) -> Result<Elimination> {
    eliminate(factors_of(tables, forbidden), evidence, m, INFERENCE_WIDTH_LIMIT)
}

fn factors_of(tables: &[&JointTable], forbidden: &[&EdgeEvent]) -> Vec<Factor> {
    let mut factors: Vec<Factor> = tables.iter().map(|t| t.factor()).collect();
    for ev in forbidden {
        if ev.edges.is_empty() {
            // An event over no edges always holds, so its negation never does.
            factors.push(Factor::constant(0.0));
        } else {
            factors.push(Factor::forbid_uniform(ev.edges.as_slice(), ev.wanted()));
        }
    }
    factors
}

fn raw_product<'a>(tables: impl IntoIterator<Item = &'a JointTable>, present: &[bool]) -> f64 {
    tables.into_iter().map(|t| t.prob_in(present)).product()
}

fn for_each_mask(m: usize, mut f: impl FnMut(&[bool])) {
    let mut present = vec![false; m];
    for mask in 0u64..1 << m {
        for (i, p) in present.iter_mut().enumerate() {
            *p = mask >> i & 1 == 1;
        }
        f(&present);
    }
}

fn cumulative(tables: &[JointTable], m: usize, accept: impl Fn(&[bool]) -> bool) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf = Vec::with_capacity(1 << m);
    for_each_mask(m, |present| {
        if accept(present) {
            acc += raw_product(tables, present);
        }
        cdf.push(acc);
    });
    cdf
}

impl ProbGraph {
    pub fn new(id: impl Into<String>, skeleton: DetGraph, tables: Vec<JointTable>) -> Result<Self> {
        Self::with_tolerance(id, skeleton, tables, Tolerance::default())
    }

    pub fn with_tolerance(
        id: impl Into<String>,
        skeleton: DetGraph,
        tables: Vec<JointTable>,
        tol: Tolerance,
    ) -> Result<Self> {
        let id = id.into();
        let report = validate(&id, &skeleton, &tables, tol)?;
        Ok(ProbGraph {
            id,
            skeleton,
            tables,
            report,
            sampler: OnceLock::new(),
        })
    }

    /// Skeleton with every edge independent, present with `marginals[e]`.
    pub fn independent(id: impl Into<String>, skeleton: DetGraph, marginals: &[f64]) -> Result<Self> {
        let tables = marginals
            .iter()
            .enumerate()
            .map(|(e, &p)| JointTable::bernoulli(e, p))
            .collect();
        Self::new(id, skeleton, tables)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn skeleton(&self) -> &DetGraph {
        &self.skeleton
    }

    pub fn tables(&self) -> &[JointTable] {
        &self.tables
    }

    pub fn edge_count(&self) -> usize {
        self.skeleton.edge_count()
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.report
    }

    pub fn normalizer(&self) -> f64 {
        self.report.normalizer
    }

    /// Product of matching table rows, before normalization.
    pub fn raw_world_weight(&self, world: &WorldAssignment) -> f64 {
        raw_product(&self.tables, world.as_slice())
    }

    pub fn world_weight(&self, world: &WorldAssignment) -> f64 {
        self.raw_world_weight(world) / self.report.normalizer
    }

    /// All `2^|E|` worlds with their weights, in increasing mask order.
    pub fn enumerate_worlds(&self, cap: usize) -> Result<Worlds<'_>> {
        let m = self.edge_count();
        if m > cap || m >= 63 {
            return Err(Error::OracleCap {
                graph: self.id.clone(),
                edges: m,
                cap,
            });
        }
        Ok(Worlds {
            graph: self,
            next: 0,
            end: 1 << m,
        })
    }

    /// Calls `f` with every world's presence vector and weight.
    pub fn for_each_world(&self, cap: usize, mut f: impl FnMut(&[bool], f64)) -> Result<()> {
        let m = self.edge_count();
        if m > cap || m >= 63 {
            return Err(Error::OracleCap {
                graph: self.id.clone(),
                edges: m,
                cap,
            });
        }
        for_each_mask(m, |present| {
            f(present, raw_product(&self.tables, present) / self.report.normalizer)
        });
        Ok(())
    }

    fn check_event(&self, ev: &EdgeEvent) -> Result<()> {
        if ev.edges.is_empty() {
            return Err(Error::InvalidParameter("edge event lists no edges".into()));
        }
        if let Some(e) = ev.edges.iter().find(|&e| e >= self.edge_count()) {
            return Err(Error::InvalidParameter(format!(
                "edge index {e} is outside graph `{}`",
                self.id
            )));
        }
        Ok(())
    }

    /// Tables connected, through shared edges, to the given edges. The
    /// remaining tables contribute the same factor to every mass involving
    /// only these edges, so it cancels.
    fn relevant_tables(&self, edges: impl IntoIterator<Item = usize>) -> Vec<&JointTable> {
        let mut marked = vec![false; self.edge_count()];
        let mut stack: Vec<usize> = Vec::new();
        for e in edges {
            if !marked[e] {
                marked[e] = true;
                stack.push(e);
            }
        }
        let mut taken = vec![false; self.tables.len()];
        while let Some(e) = stack.pop() {
            for (t, table) in self.tables.iter().enumerate() {
                if taken[t] || !table.edges.contains(&e) {
                    continue;
                }
                taken[t] = true;
                for &f in &table.edges {
                    if !marked[f] {
                        marked[f] = true;
                        stack.push(f);
                    }
                }
            }
        }
        self.tables
            .iter()
            .zip(taken)
            .filter(|(_, t)| *t)
            .map(|(table, _)| table)
            .collect()
    }

    /// Probability that `evidence` holds and no event of `forbidden` does.
    fn probability(
        &self,
        evidence: &[(usize, bool)],
        forbidden: &[&EdgeEvent],
        limits: InferenceLimits,
    ) -> Result<f64> {
        let touched = evidence
            .iter()
            .map(|&(e, _)| e)
            .chain(forbidden.iter().flat_map(|ev| ev.edges.iter()));
        let tables = self.relevant_tables(touched);
        let m = self.edge_count();
        let base = total_mass(&tables, m, &[], &[], limits)?;
        let mass = total_mass(&tables, m, evidence, forbidden, limits)?;
        Ok((mass / base).clamp(0.0, 1.0))
    }

    pub fn event_prob(&self, ev: &EdgeEvent) -> Result<f64> {
        self.check_event(ev)?;
        let evidence: Vec<_> = ev.evidence().collect();
        self.probability(&evidence, &[], InferenceLimits::default())
    }

    /// Probability that none of `events` holds.
    pub fn none_prob(&self, events: &[EdgeEvent]) -> Result<f64> {
        for ev in events {
            self.check_event(ev)?;
        }
        let refs: Vec<&EdgeEvent> = events.iter().collect();
        self.probability(&[], &refs, InferenceLimits::default())
    }

    /// `Pr(target | no event in given_not holds)`.
    pub fn cond_prob(&self, target: &EdgeEvent, given_not: &[EdgeEvent]) -> Result<f64> {
        self.cond_prob_within(target, given_not, InferenceLimits::default())
    }

    /// `cond_prob` under an explicit inference budget.
    pub fn cond_prob_within(
        &self,
        target: &EdgeEvent,
        given_not: &[EdgeEvent],
        limits: InferenceLimits,
    ) -> Result<f64> {
        self.check_event(target)?;
        for ev in given_not {
            self.check_event(ev)?;
        }
        let refs: Vec<&EdgeEvent> = given_not.iter().collect();
        // Both masses over one table set, so the normalizer cancels.
        let tables = self.relevant_tables(
            target
                .edges
                .iter()
                .chain(given_not.iter().flat_map(|ev| ev.edges.iter())),
        );
        let m = self.edge_count();
        let den = total_mass(&tables, m, &[], &refs, limits)?;
        if den <= 0.0 {
            return Err(Error::ZeroProbabilityCondition);
        }
        let evidence: Vec<_> = target.evidence().collect();
        let num = total_mass(&tables, m, &evidence, &refs, limits)?;
        Ok((num / den).clamp(0.0, 1.0))
    }

    fn world_sampler(&self) -> &WorldSampler {
        self.sampler.get_or_init(|| {
            let m = self.edge_count();
            let all: Vec<&JointTable> = self.tables.iter().collect();
            match run_elimination(&all, m, &[], &[]) {
                Ok(run) => WorldSampler::Buckets(run),
                Err(_) => WorldSampler::Cumulative(cumulative(&self.tables, m, |_| true)),
            }
        })
    }

    pub fn sample_world_with<R: Rng + ?Sized>(&self, rng: &mut R) -> WorldAssignment {
        self.world_sampler().draw(rng, self.edge_count())
    }

    pub fn sample_world(&self, seed: u64) -> WorldAssignment {
        self.sample_world_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Sampler for the distribution conditioned on `condition`.
    pub fn conditional_sampler(&self, condition: &EdgeEvent) -> Result<ConditionalSampler> {
        self.check_event(condition)?;
        let m = self.edge_count();
        let evidence: Vec<_> = condition.evidence().collect();
        let all: Vec<&JointTable> = self.tables.iter().collect();
        let sampler = match run_elimination(&all, m, &evidence, &[]) {
            Ok(run) if run.total <= 0.0 => return Err(Error::ZeroProbabilityCondition),
            Ok(run) => WorldSampler::Buckets(run),
            Err(Error::InferenceBudget { .. }) if m <= oracle_cap_from_env() => {
                let cdf = cumulative(&self.tables, m, |p| condition.holds(p));
                if cdf.last().is_none_or(|&t| t <= 0.0) {
                    return Err(Error::ZeroProbabilityCondition);
                }
                WorldSampler::Cumulative(cdf)
            }
            Err(e) => return Err(e),
        };
        Ok(ConditionalSampler { sampler, edges: m })
    }

    pub fn cond_sample(&self, condition: &EdgeEvent, seed: u64) -> Result<WorldAssignment> {
        let sampler = self.conditional_sampler(condition)?;
        Ok(sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
    }
}

pub struct Worlds<'a> {
    graph: &'a ProbGraph,
    next: u64,
    end: u64,
}

impl Iterator for Worlds<'_> {
    type Item = (WorldAssignment, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next == self.end {
            return None;
        }
        let w = WorldAssignment::from_mask(self.next, self.graph.edge_count());
        self.next += 1;
        let p = self.graph.world_weight(&w);
        Some((w, p))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}
