//! Similarity-probability verification: the Karp–Luby union estimator over
//! embedding events, and exact evaluation by world enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{distinct_edge_images, DetGraph, DistanceOracle, EdgeSet, RelaxedQuerySet};
use crate::prob::{ConditionalSampler, EdgeEvent, ProbGraph};
use crate::seed::derive_seed;
use crate::sip::sample_size;

/// Distinct images kept per relaxed query before the event list is marked
/// incomplete.
pub const VERIFY_IMAGE_CAP: usize = 5000;
pub const VERIFY_MAP_BUDGET: usize = 1_000_000;
/// Draws allowed per conditional world when rejection sampling is needed.
const REJECTION_BUDGET: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledEstimate {
    /// `V * Cnt / N`, clamped to `[0, 1]`.
    pub estimate: f64,
    /// `Cnt / N`.
    pub ratio: f64,
    /// Sum of the event probabilities.
    pub v: f64,
    pub samples: usize,
    pub hits: usize,
    pub events: usize,
    /// False when an image scan hit its cap.
    pub events_complete: bool,
    /// Some event probability was itself estimated by sampling.
    pub doubly_approximate: bool,
}

impl SampledEstimate {
    fn exact(value: f64, events: usize, complete: bool) -> Self {
        SampledEstimate {
            estimate: value,
            ratio: if value > 0.0 { 1.0 } else { 0.0 },
            v: value,
            samples: 0,
            hits: 0,
            events,
            events_complete: complete,
            doubly_approximate: false,
        }
    }
}

/// Edge images of every relaxed query in the skeleton, deduplicated, with
/// images that contain another image removed (their events imply the
/// smaller one, so the union is unchanged).
pub fn embedding_events(relaxed: &RelaxedQuerySet, skeleton: &DetGraph) -> (Vec<EdgeSet>, bool) {
    let mut images = Vec::new();
    let mut complete = true;
    for rq in &relaxed.members {
        let scan = distinct_edge_images(rq, skeleton, VERIFY_IMAGE_CAP, VERIFY_MAP_BUDGET);
        complete &= scan.complete;
        images.extend(scan.images);
    }
    images.sort_by(|a: &EdgeSet, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    images.dedup();
    let mut kept: Vec<EdgeSet> = Vec::new();
    for img in images {
        if !kept.iter().any(|k| k.is_subset(&img)) {
            kept.push(img);
        }
    }
    (kept, complete)
}

fn sampled_prob(g: &ProbGraph, ev: &EdgeEvent, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..n)
        .filter(|_| ev.holds(g.sample_world_with(&mut rng).as_slice()))
        .count();
    hits as f64 / n as f64
}

enum Draw {
    Exact(ConditionalSampler),
    Rejection,
}

fn draw_conditioned<R: Rng>(g: &ProbGraph, ev: &EdgeEvent, how: &Draw, rng: &mut R) -> Result<Vec<bool>> {
    match how {
        Draw::Exact(s) => Ok(s.sample(rng).as_slice().to_vec()),
        Draw::Rejection => {
            for _ in 0..REJECTION_BUDGET {
                let w = g.sample_world_with(rng);
                if ev.holds(w.as_slice()) {
                    return Ok(w.as_slice().to_vec());
                }
            }
            Err(Error::EstimationFailure {
                samples: REJECTION_BUDGET,
            })
        }
    }
}

/// Karp–Luby estimate of the probability that some relaxed query embeds in
/// a random world of `g`, from `sample_size(tau, xi)` trials.
pub fn verify_ssp_sampled(
    g: &ProbGraph,
    relaxed: &RelaxedQuerySet,
    tau: f64,
    xi: f64,
    seed: u64,
) -> Result<SampledEstimate> {
    let (images, complete) = embedding_events(relaxed, g.skeleton());
    if images.is_empty() {
        return Ok(SampledEstimate::exact(0.0, 0, complete));
    }
    if images[0].is_empty() {
        // An edgeless relaxed query embeds in every world.
        return Ok(SampledEstimate::exact(1.0, images.len(), complete));
    }
    let events: Vec<EdgeEvent> = images.iter().map(|s| EdgeEvent::all_present(s.iter())).collect();
    let n = sample_size(tau, xi);

    let mut doubly = false;
    let mut probs = Vec::with_capacity(events.len());
    for (i, ev) in events.iter().enumerate() {
        let p = match g.event_prob(ev) {
            Ok(p) => p,
            Err(Error::InferenceBudget { .. } | Error::OracleCap { .. }) => {
                doubly = true;
                sampled_prob(g, ev, n, derive_seed(seed, format!("event-{i}").as_bytes()))
            }
            Err(e) => return Err(e),
        };
        probs.push(p);
    }
    let v: f64 = probs.iter().sum();
    if v <= 0.0 {
        return Ok(SampledEstimate {
            doubly_approximate: doubly,
            ..SampledEstimate::exact(0.0, events.len(), complete)
        });
    }
    if events.len() == 1 {
        return Ok(SampledEstimate {
            estimate: v.min(1.0),
            ratio: 1.0,
            v,
            samples: n,
            hits: n,
            events: 1,
            events_complete: complete,
            doubly_approximate: doubly,
        });
    }

    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    let mut draws: Vec<Option<Draw>> = (0..events.len()).map(|_| None).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n {
        let r = rng.random::<f64>() * v;
        let i = cumulative.partition_point(|&c| c <= r).min(events.len() - 1);
        let i = if probs[i] > 0.0 {
            i
        } else {
            // Float edge case at a zero-width slot: step back to a live event.
            (0..i).rev().find(|&j| probs[j] > 0.0).expect("v > 0")
        };
        let how = draws[i].get_or_insert_with(|| match g.conditional_sampler(&events[i]) {
            Ok(s) => Draw::Exact(s),
            Err(_) => Draw::Rejection,
        });
        let world = draw_conditioned(g, &events[i], how, &mut rng)?;
        if !events[..i].iter().any(|ev| ev.holds(&world)) {
            hits += 1;
        }
    }
    let ratio = hits as f64 / n as f64;
    Ok(SampledEstimate {
        estimate: (v * ratio).clamp(0.0, 1.0),
        ratio,
        v,
        samples: n,
        hits,
        events: events.len(),
        events_complete: complete,
        doubly_approximate: doubly,
    })
}

/// Exact probability that a random world of `g` lies within distance
/// `delta` of the oracle's query. Fails beyond `cap` edges.
pub fn exact_ssp(g: &ProbGraph, oracle: &DistanceOracle, delta: usize, cap: usize) -> Result<f64> {
    let skeleton = g.skeleton();
    if !oracle.within(skeleton, delta) {
        return Ok(0.0);
    }
    let mut total = 0.0;
    g.for_each_world(cap, |present, w| {
        if w > 0.0 && oracle.within(&skeleton.world_graph(present), delta) {
            total += w;
        }
    })?;
    Ok(total.min(1.0))
}
