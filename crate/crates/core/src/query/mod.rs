//! Threshold similarity queries: structural pruning, bound-based pruning
//! from the index, and verification of the remaining candidates.

mod cover;
mod verify;

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::database::Database;
use crate::error::{Error, Result};
use crate::graph::{relax_query, subgraph_iso_exists, DetGraph, DistanceOracle, Label, RelaxOptions, RelaxedQuerySet};
use crate::io::{QueryDocument, FORMAT_VERSION};
use crate::pmi::Pmi;
use crate::prob::{oracle_cap_from_env, ProbGraph};
use crate::seed::derive_seed;

pub use cover::{
    greedy_cover_upper, randomized_round, rounding_rounds, solve_relaxed_qp, CoverInstance, CoverResult,
    CoverSet, QpSolution, Rounding, QP_ITERATIONS, QP_STARTS, QP_STEP,
};
pub use verify::{embedding_events, exact_ssp, verify_ssp_sampled, SampledEstimate};

/// A threshold query: graphs whose worlds lie within `delta` edge edits of
/// `q` with probability at least `epsilon`.
#[derive(Clone, Debug)]
pub struct TpsQuery {
    pub q: DetGraph,
    pub delta: usize,
    pub epsilon: f64,
}

impl TpsQuery {
    pub fn new(q: DetGraph, delta: usize, epsilon: f64) -> Result<Self> {
        if q.is_empty() || !q.is_connected() {
            return Err(Error::InvalidParameter("query graph must be connected and non-empty".into()));
        }
        if delta > q.edge_count() {
            return Err(Error::InvalidParameter(format!(
                "delta {delta} exceeds the query's {} edges",
                q.edge_count()
            )));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} is outside (0, 1]")));
        }
        Ok(TpsQuery { q, delta, epsilon })
    }

    pub fn from_document(doc: &QueryDocument) -> Result<Self> {
        TpsQuery::new(doc.query.to_graph()?, doc.delta, doc.epsilon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryParams {
    pub tau: f64,
    pub xi: f64,
    pub seed: u64,
    /// Accept graphs whose lower bound reaches the threshold without
    /// verifying them.
    pub enable_accept_pruning: bool,
    /// Verify by world enumeration when the graph is within the oracle cap.
    pub exact_verify: bool,
    /// Use `Cnt / N` instead of `V * Cnt / N` as the sampled estimate.
    pub literal_estimator: bool,
    /// Allow edge relabeling, over the database's edge labels, as an edit.
    pub relabel: bool,
    /// Skip isomorphism tests for relaxed queries containing a feature that
    /// is absent from the graph.
    pub prefilter: bool,
    pub oracle_cap: usize,
    /// Record wall-clock timings in the report (makes it non-reproducible).
    pub record_timings: bool,
}

impl Default for QueryParams {
    fn default() -> Self {
        QueryParams {
            tau: 0.1,
            xi: 0.05,
            seed: 0,
            enable_accept_pruning: false,
            exact_verify: false,
            literal_estimator: false,
            relabel: false,
            prefilter: true,
            oracle_cap: oracle_cap_from_env(),
            record_timings: false,
        }
    }
}

/// Subgraph relations between index features and relaxed queries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Containment {
    /// `inside[j]`: relaxed queries containing feature `j`.
    pub inside: Vec<Vec<usize>>,
    /// `around[j]`: relaxed queries contained in feature `j`.
    pub around: Vec<Vec<usize>>,
}

impl Containment {
    pub fn new(features: &[DetGraph], relaxed: &RelaxedQuerySet) -> Self {
        let fits = |small: &DetGraph, big: &DetGraph| {
            small.vertex_count() <= big.vertex_count()
                && small.edge_count() <= big.edge_count()
                && subgraph_iso_exists(small, big)
        };
        let (inside, around) = features
            .par_iter()
            .map(|f| {
                let inside = (0..relaxed.len()).filter(|&i| fits(f, &relaxed.members[i])).collect();
                let around = (0..relaxed.len()).filter(|&i| fits(&relaxed.members[i], f)).collect();
                (inside, around)
            })
            .unzip();
        Containment { inside, around }
    }

    /// Features contained in each relaxed query.
    fn required(&self, relaxed: usize) -> Vec<Vec<usize>> {
        let mut req = vec![Vec::new(); relaxed];
        for (j, rqs) in self.inside.iter().enumerate() {
            for &i in rqs {
                req[i].push(j);
            }
        }
        req
    }
}

/// Database positions of graphs whose skeleton contains some relaxed query.
/// With `prefilter`, a relaxed query is skipped for a graph when one of the
/// index features it contains is absent from that graph.
pub fn structural_prune(
    db: &Database,
    relaxed: &RelaxedQuerySet,
    prefilter: Option<(&Pmi, &Containment)>,
) -> Vec<usize> {
    let required = prefilter.map(|(_, c)| c.required(relaxed.len()));
    db.graphs()
        .par_iter()
        .enumerate()
        .filter(|(pos, g)| {
            relaxed.members.iter().enumerate().any(|(i, rq)| {
                if let (Some((pmi, _)), Some(req)) = (prefilter, &required) {
                    if req[i].iter().any(|&j| pmi.entry(j, *pos).is_absent()) {
                        return false;
                    }
                }
                subgraph_iso_exists(rq, g.skeleton())
            })
        })
        .map(|(pos, _)| pos)
        .collect()
}

/// Sets `{i : f_j within rq_i}` weighted by the features' upper bounds in
/// the given index column.
pub fn build_upper_instance(relaxed: usize, containment: &Containment, pmi: &Pmi, column: usize) -> CoverInstance {
    let mut inst = CoverInstance::new(relaxed);
    for (j, rqs) in containment.inside.iter().enumerate() {
        let entry = pmi.entry(j, column);
        if entry.is_absent() {
            continue;
        }
        let (_, upper) = entry.bounds();
        inst.push(j, rqs.clone(), 0.0, upper);
    }
    inst
}

/// Sets `{i : rq_i within f_j}` weighted by the features' bound pairs.
pub fn build_lower_instance(relaxed: usize, containment: &Containment, pmi: &Pmi, column: usize) -> CoverInstance {
    let mut inst = CoverInstance::new(relaxed);
    for (j, rqs) in containment.around.iter().enumerate() {
        let entry = pmi.entry(j, column);
        if entry.is_absent() {
            continue;
        }
        let (lower, upper) = entry.bounds();
        inst.push(j, rqs.clone(), lower, upper);
    }
    inst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Rejected,
    Accepted,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SspBounds {
    /// `None` when the upper-bound sets do not cover every relaxed query.
    pub u_sim: Option<f64>,
    pub l_sim: f64,
    /// Feature ids of the greedy cover.
    pub upper_features: Vec<usize>,
    /// Feature ids picked by rounding.
    pub lower_features: Vec<usize>,
    pub qp_objective: f64,
    /// Relaxed queries no lower-bound set contains.
    pub qp_dropped: usize,
    pub rounding_covered: bool,
}

/// Upper and lower similarity bounds for one graph from its index column.
pub fn ssp_bounds(relaxed: usize, containment: &Containment, pmi: &Pmi, column: usize, seed: u64) -> SspBounds {
    let upper = build_upper_instance(relaxed, containment, pmi, column);
    let cover = greedy_cover_upper(&upper);
    let lower = build_lower_instance(relaxed, containment, pmi, column);
    let sol = solve_relaxed_qp(&lower);
    let round = randomized_round(&sol.x, &lower, seed);
    SspBounds {
        u_sim: cover.as_ref().map(|c| c.weight),
        l_sim: round.l_sim,
        upper_features: cover
            .map(|c| c.selected.iter().map(|&s| upper.sets[s].feature).collect())
            .unwrap_or_default(),
        lower_features: round.selected.iter().map(|&s| lower.sets[s].feature).collect(),
        qp_objective: sol.objective,
        qp_dropped: sol.dropped.len(),
        rounding_covered: round.covered,
    }
}

/// Rejects when a full cover's upper bound is below `epsilon`; accepts when
/// enabled and the lower bound reaches it.
pub fn probabilistic_prune(bounds: &SspBounds, epsilon: f64, accept_pruning: bool) -> Decision {
    match bounds.u_sim {
        Some(u) if u < epsilon => Decision::Rejected,
        _ if accept_pruning && bounds.l_sim >= epsilon => Decision::Accepted,
        _ => Decision::Undecided,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMethod {
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub method: VerifyMethod,
    /// The value compared against the threshold.
    pub estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled: Option<SampledEstimate>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub id: String,
    pub bounds: SspBounds,
    pub decision: Decision,
    /// Whether the lower bound alone would have accepted the graph.
    pub lower_reaches_threshold: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub answer: bool,
    /// Sampled estimate within `2 * tau` of the threshold.
    pub margin: bool,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageCounts {
    pub database: usize,
    pub structural: usize,
    /// Survivors of bound-based pruning (accepted plus undecided).
    pub candidates: usize,
    pub answers: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub relax_ms: f64,
    pub structural_ms: f64,
    pub pruning_ms: f64,
    pub verification_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryReport {
    pub format_version: u32,
    pub database_checksum: String,
    pub delta: usize,
    pub epsilon: f64,
    pub relaxed_queries: usize,
    pub params: QueryParams,
    pub stages: StageCounts,
    pub structural: Vec<String>,
    pub rejected: Vec<String>,
    pub accepted: Vec<String>,
    pub undecided: Vec<String>,
    pub answers: Vec<String>,
    pub margin_flagged: Vec<String>,
    pub graphs: Vec<GraphReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

fn relax_options(db: &Database, relabel: bool) -> RelaxOptions {
    if !relabel {
        return RelaxOptions::default();
    }
    let labels: BTreeSet<Label> = db
        .graphs()
        .iter()
        .flat_map(|g| g.skeleton().edges().iter().map(|e| e.label.clone()))
        .collect();
    RelaxOptions {
        relabel: true,
        alphabet: labels.into_iter().collect(),
    }
}

struct Ctx<'a> {
    query: &'a TpsQuery,
    params: &'a QueryParams,
    relaxed: &'a RelaxedQuerySet,
    oracle: Option<&'a DistanceOracle>,
}

fn verify_graph(ctx: &Ctx, g: &ProbGraph, seed: u64) -> Result<Verification> {
    let seed = derive_seed(seed, b"verify");
    if let Some(oracle) = ctx.oracle.filter(|_| g.edge_count() <= ctx.params.oracle_cap) {
        let value = exact_ssp(g, oracle, ctx.query.delta, ctx.params.oracle_cap)?;
        return Ok(Verification {
            method: VerifyMethod::Exact,
            estimate: value,
            sampled: None,
            seed,
        });
    }
    let est = verify_ssp_sampled(g, ctx.relaxed, ctx.params.tau, ctx.params.xi, seed)?;
    Ok(Verification {
        method: VerifyMethod::Sampled,
        estimate: if ctx.params.literal_estimator { est.ratio } else { est.estimate },
        sampled: Some(est),
        seed,
    })
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs the full pipeline and returns the answer ids in database order.
pub fn run_query(
    db: &Database,
    pmi: &Pmi,
    query: &TpsQuery,
    params: &QueryParams,
) -> Result<(Vec<String>, QueryReport)> {
    pmi.check_database(db)?;
    if pmi.columns.iter().map(String::as_str).ne(db.ids()) {
        return Err(Error::IndexMismatch("index columns do not follow database order".into()));
    }
    let start = Instant::now();
    let opts = relax_options(db, params.relabel);
    let relaxed = relax_query(&query.q, query.delta, &opts)?;
    let oracle = if params.exact_verify {
        Some(DistanceOracle::new(&query.q, &opts)?)
    } else {
        None
    };
    let patterns: Vec<DetGraph> = pmi.features.iter().map(|f| f.pattern.clone()).collect();
    let containment = Containment::new(&patterns, &relaxed);
    let relax_ms = ms(start);

    let t = Instant::now();
    let survivors = structural_prune(db, &relaxed, params.prefilter.then_some((pmi, &containment)));
    let structural_ms = ms(t);

    let t = Instant::now();
    let pruned: Vec<(usize, u64, SspBounds, Decision)> = survivors
        .par_iter()
        .map(|&pos| {
            let seed = derive_seed(params.seed, db.graphs()[pos].id().as_bytes());
            let bounds = ssp_bounds(relaxed.len(), &containment, pmi, pos, derive_seed(seed, b"round"));
            let decision = probabilistic_prune(&bounds, query.epsilon, params.enable_accept_pruning);
            (pos, seed, bounds, decision)
        })
        .collect();
    let pruning_ms = ms(t);

    let t = Instant::now();
    let ctx = Ctx {
        query,
        params,
        relaxed: &relaxed,
        oracle: oracle.as_ref(),
    };
    let graphs: Vec<GraphReport> = pruned
        .into_par_iter()
        .map(|(pos, seed, bounds, decision)| {
            let g = &db.graphs()[pos];
            let mut report = GraphReport {
                id: g.id().to_string(),
                lower_reaches_threshold: bounds.l_sim >= query.epsilon,
                bounds,
                decision,
                verification: None,
                error: None,
                answer: decision == Decision::Accepted,
                margin: false,
                seed,
            };
            if decision == Decision::Undecided {
                match verify_graph(&ctx, g, seed) {
                    Ok(v) => {
                        report.answer = v.estimate >= query.epsilon;
                        report.margin = v.method == VerifyMethod::Sampled
                            && (v.estimate - query.epsilon).abs() < 2.0 * params.tau;
                        report.verification = Some(v);
                    }
                    Err(e) => report.error = Some(e.to_string()),
                }
            }
            report
        })
        .collect();
    let verification_ms = ms(t);

    let ids = |pred: &dyn Fn(&GraphReport) -> bool| -> Vec<String> {
        graphs.iter().filter(|r| pred(r)).map(|r| r.id.clone()).collect()
    };
    let answers = ids(&|r| r.answer);
    let report = QueryReport {
        format_version: FORMAT_VERSION,
        database_checksum: pmi.database_checksum.clone(),
        delta: query.delta,
        epsilon: query.epsilon,
        relaxed_queries: relaxed.len(),
        params: params.clone(),
        stages: StageCounts {
            database: db.len(),
            structural: graphs.len(),
            candidates: graphs.iter().filter(|r| r.decision != Decision::Rejected).count(),
            answers: answers.len(),
        },
        structural: ids(&|_| true),
        rejected: ids(&|r| r.decision == Decision::Rejected),
        accepted: ids(&|r| r.decision == Decision::Accepted),
        undecided: ids(&|r| r.decision == Decision::Undecided),
        answers: answers.clone(),
        margin_flagged: ids(&|r| r.margin),
        graphs,
        timings: params.record_timings.then(|| Timings {
            relax_ms,
            structural_ms,
            pruning_ms,
            verification_ms,
            total_ms: ms(start),
        }),
    };
    Ok((answers, report))
}
