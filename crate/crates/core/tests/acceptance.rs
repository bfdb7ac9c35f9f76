//! Acceptance suite. Runs every criterion and prints one PASS/FAIL line for
//! each. Criteria listed in `KNOWN_FAILURES` cannot hold for this model and
//! still print FAIL; any other failure makes the run exit non-zero.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p pgsim-core --test acceptance -- 3 7`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::{brute_embeddings, brute_transversals, fixture, mass, mixed_corpus, random_connected_subgraph, small_corpus};
use pgsim_core::database::Database;
use pgsim_core::graph::{relax_query, subgraph_iso_exists, DetGraph, DistanceOracle, EdgeSet, RelaxOptions};
use pgsim_core::io::generator::{generate, sample_query, GeneratorConfig, TableMode};
use pgsim_core::io::{read_database, read_query};
use pgsim_core::pmi::{build_index, IndexParams, MiningParams, Pmi, PmiEntry};
use pgsim_core::prob::{EdgeEvent, ProbGraph, WorldAssignment};
use pgsim_core::query::{
    build_lower_instance, build_upper_instance, embedding_events, exact_ssp, greedy_cover_upper, randomized_round,
    run_query, solve_relaxed_qp, verify_ssp_sampled, Containment, CoverInstance, Decision, QueryParams, TpsQuery,
};
use pgsim_core::sip::{build_event_family, exact_sip, lower_bound_sip, upper_bound_sip, FamilyKind, SipParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_CAP: usize = 20;

/// Criteria that fail by construction, with the reason printed next to them.
const KNOWN_FAILURES: [(u32, &str); 2] = [
    (
        2,
        "the bounds treat edge-disjoint embeddings and cuts as independent, which correlated tables break; \
         independent-edge graphs show no violations",
    ),
    (8, "ln|U| is below the greedy guarantee H(|U|), and no instance exceeds H(|U|)"),
];

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn oracle_for(q: &DetGraph) -> DistanceOracle {
    DistanceOracle::new(q, &RelaxOptions::default()).unwrap()
}

fn edges_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|e| mask >> e & 1 == 1).collect()
}

fn mask_of(s: &EdgeSet) -> u32 {
    s.iter().fold(0, |acc, e| acc | 1 << e)
}

/// Connected query of 1 to 4 edges cut from a random corpus graph.
fn random_query(rng: &mut ChaCha8Rng, graphs: &[ProbGraph]) -> DetGraph {
    loop {
        let source = &graphs[rng.random_range(0..graphs.len())];
        let edges = rng.random_range(1..=4);
        if let Some(q) = sample_query(source.skeleton(), edges, rng) {
            return q;
        }
    }
}

fn criterion_1() -> Outcome {
    let graphs = mixed_corpus(240, 101);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut checks, mut worst_union, mut worst_ie) = (0usize, 0.0f64, 0.0f64);
    let mut bad = Vec::new();
    for g in &graphs {
        assert!(g.edge_count() <= 10);
        for _ in 0..2 {
            let q = random_query(&mut rng, &graphs);
            let delta = rng.random_range(0..=2usize).min(q.edge_count());
            let exact = exact_ssp(g, &oracle_for(&q), delta, ORACLE_CAP).unwrap();

            // Union form: some relaxed query embeds, with images found by
            // exhaustive vertex assignment.
            let relaxed = relax_query(&q, delta, &RelaxOptions::default()).unwrap();
            let images: BTreeSet<u32> = relaxed
                .members
                .iter()
                .flat_map(|rq| brute_embeddings(rq, g.skeleton()).1)
                .map(|s| mask_of(&s))
                .collect();
            let union = mass(g, |p| {
                images.iter().any(|&m| edges_of(m).iter().all(|&e| p[e]))
            });

            // Inclusion-exclusion, grouping subsets by the union of their
            // images: coef[m] = sum over subsets S with union m of (-1)^|S|.
            let mut coef: BTreeMap<u32, f64> = BTreeMap::from([(0, 1.0)]);
            for &img in &images {
                let snapshot: Vec<(u32, f64)> = coef.iter().map(|(&m, &c)| (m, c)).collect();
                for (m, c) in snapshot {
                    *coef.entry(m | img).or_insert(0.0) -= c;
                }
            }
            let mut none = 0.0;
            for (&m, &c) in &coef {
                let p = if m == 0 { 1.0 } else { g.event_prob(&EdgeEvent::all_present(edges_of(m))).unwrap() };
                none += c * p;
            }
            let ie = 1.0 - none;

            worst_union = worst_union.max((exact - union).abs());
            worst_ie = worst_ie.max((exact - ie).abs());
            if (exact - union).abs() > 1e-9 || (exact - ie).abs() > 1e-9 {
                bad.push(format!("{} delta={delta}", g.id()));
            }
            checks += 1;
        }
    }
    outcome(
        bad.is_empty() && graphs.len() >= 200,
        format!(
            "{} graphs, {checks} (graph, query) checks; max |exact-union| {worst_union:.1e}, max |exact-ie| {worst_ie:.1e}; mismatches {}",
            graphs.len(),
            bad.len()
        ),
    )
}

/// (feature, graph) pairs where the feature occurs in the skeleton: random
/// connected subgraphs of 1 to 3 edges cut from corpus graphs.
fn sip_pairs(graphs: &[ProbGraph], per_graph: usize, seed: u64) -> Vec<(DetGraph, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for (gi, g) in graphs.iter().enumerate() {
        let mut found = 0;
        let mut tries = 0;
        while found < per_graph && tries < 50 {
            tries += 1;
            let source = if rng.random_bool(0.5) { g } else { &graphs[rng.random_range(0..graphs.len())] };
            let edges = rng.random_range(1..=3);
            let Some(f) = random_connected_subgraph(&mut rng, source.skeleton(), edges) else {
                continue;
            };
            if subgraph_iso_exists(&f, g.skeleton()) {
                pairs.push((f, gi));
                found += 1;
            }
        }
    }
    pairs
}

/// `prod (1 - Pr(member i | no member overlapping i))` over `clique`, with
/// every conditional computed from world weights. A member's event is all
/// its edges taking the value `present`.
fn oracle_complement(g: &ProbGraph, members: &[EdgeSet], present: bool, clique: &[usize]) -> f64 {
    let holds = |m: &EdgeSet, p: &[bool]| m.iter().all(|e| p[e] == present);
    clique
        .iter()
        .map(|&i| {
            let others: Vec<&EdgeSet> = members.iter().filter(|m| *m != &members[i] && !m.is_disjoint(&members[i])).collect();
            let free = |p: &[bool]| !others.iter().any(|m| holds(m, p));
            let den = mass(g, free);
            let cond = if den > 0.0 { mass(g, |p| free(p) && holds(&members[i], p)) / den } else { 0.0 };
            1.0 - cond
        })
        .product()
}

fn pairwise_disjoint(members: &[EdgeSet], clique: &[usize]) -> bool {
    clique.iter().all(|&i| clique.iter().all(|&j| i == j || members[i].is_disjoint(&members[j])))
}

fn criterion_2() -> Outcome {
    let graphs = mixed_corpus(300, 202);
    let pairs = sip_pairs(&graphs, 2, 2);
    let params = SipParams::default();
    let (mut checked, mut inexact, mut low_bad, mut up_bad, mut formula_ok) = (0usize, 0usize, 0usize, 0usize, 0usize);
    let mut by_mode = [[0usize; 2]; 3];
    let mut worst = 0.0f64;
    let mut failures = 0;
    for (f, gi) in &pairs {
        let g = &graphs[*gi];
        let exact = exact_sip(f, g, ORACLE_CAP).unwrap();
        let lower = lower_bound_sip(f, g, &params).unwrap();
        let upper = match upper_bound_sip(f, g, &params) {
            Ok(u) => u,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        if lower.sampled + upper.sampled > 0 {
            inexact += 1;
            continue;
        }
        checked += 1;

        // The computed bounds are the bound formulas evaluated exactly.
        let images: Vec<EdgeSet> = brute_embeddings(f, g.skeleton()).1.into_iter().collect();
        let cuts: Vec<EdgeSet> = brute_transversals(&images).into_iter().collect();
        let low_oracle = 1.0 - oracle_complement(g, &images, true, &lower.clique);
        let up_oracle = oracle_complement(g, &cuts, false, &upper.clique);
        if pairwise_disjoint(&images, &lower.clique)
            && pairwise_disjoint(&cuts, &upper.clique)
            && (low_oracle - lower.value).abs() < 1e-9
            && (up_oracle - upper.value).abs() < 1e-9
        {
            formula_ok += 1;
        }

        let mode = mode_of(g);
        if lower.value > exact + 1e-9 {
            low_bad += 1;
            by_mode[mode][0] += 1;
            worst = worst.max(lower.value - exact);
        }
        if exact > upper.value + 1e-9 {
            up_bad += 1;
            by_mode[mode][1] += 1;
            worst = worst.max(exact - upper.value);
        }
    }
    outcome(
        checked >= 500 && low_bad == 0 && up_bad == 0,
        format!(
            "{checked} pairs with exact conditionals ({inexact} sampled, {failures} without cut family); \
             lower>exact {low_bad}, exact>upper {up_bad} (by mode independent/random/max: {:?}); worst excess {worst:.4}; \
             bounds equal the formulas recomputed from world weights on {formula_ok}/{checked}",
            by_mode
        ),
    )
}

/// Index of the corpus generated with the graph's table mode, from the id
/// prefix given by `mixed_corpus`.
fn mode_of(g: &ProbGraph) -> usize {
    let seed: u64 = g.id().trim_start_matches('s').split('-').next().unwrap().parse().unwrap();
    (seed % 31) as usize
}

fn criterion_3() -> Outcome {
    let graphs = mixed_corpus(300, 202);
    let pairs = sip_pairs(&graphs, 2, 2);
    let params = SipParams::default();
    let (mut checked, mut bad_prob, mut bad_cuts) = (0usize, 0usize, 0usize);
    let mut worst = 0.0f64;
    for (f, gi) in &pairs {
        let g = &graphs[*gi];
        let exact = exact_sip(f, g, ORACLE_CAP).unwrap();
        let emb = build_event_family(f, g.skeleton(), FamilyKind::Embedding, &params).unwrap();
        let cuts = build_event_family(f, g.skeleton(), FamilyKind::Cut, &params).unwrap();
        let emb_events: Vec<EdgeEvent> = (0..emb.len()).map(|i| emb.event(i)).collect();
        let cut_events: Vec<EdgeEvent> = (0..cuts.len()).map(|i| cuts.event(i)).collect();
        let via_emb = 1.0 - g.none_prob(&emb_events).unwrap();
        let via_cuts = g.none_prob(&cut_events).unwrap();
        let err = (exact - via_emb).abs().max((exact - via_cuts).abs());
        worst = worst.max(err);
        if err > 1e-9 {
            bad_prob += 1;
        }
        let brute: BTreeSet<EdgeSet> = brute_transversals(&emb.members);
        let got: BTreeSet<EdgeSet> = cuts.members.iter().cloned().collect();
        if brute != got {
            bad_cuts += 1;
        }
        checked += 1;
    }
    outcome(
        checked >= 500 && bad_prob == 0 && bad_cuts == 0,
        format!("{checked} pairs; max deviation {worst:.1e}; probability mismatches {bad_prob}; cut family mismatches {bad_cuts}"),
    )
}

fn criterion_4() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let db = read_database(&fixture("graph002_analog.json")).unwrap();
    let world = WorldAssignment::new(vec![true, true, true, true, false]);
    let w = db.graphs()[0].raw_world_weight(&world);
    pass &= w == 0.075;
    notes.push(format!("weight product {w}"));

    let mut ex3 = CoverInstance::new(3);
    ex3.push(0, vec![0, 1], 0.0, 0.4);
    ex3.push(1, vec![1, 2], 0.0, 0.1);
    ex3.push(2, vec![0, 2], 0.0, 0.5);
    let greedy = greedy_cover_upper(&ex3).unwrap().weight;
    pass &= greedy == 0.5;
    notes.push(format!("greedy upper {greedy}"));

    let mut ex4 = CoverInstance::new(3);
    ex4.push(0, vec![0], 0.28, 0.36);
    ex4.push(1, vec![0, 1, 2], 0.08, 0.15);
    let sol = solve_relaxed_qp(&ex4);
    let lows: Vec<f64> = (0..20).map(|s| randomized_round(&sol.x, &ex4, s).l_sim).collect();
    pass &= lows.iter().all(|l| (l - 0.306).abs() <= 0.005);
    notes.push(format!("lower {:.4} over 20 rounding seeds", lows[0]));

    // Absent entries: bounds (0, 0), left out of columns and cover sets.
    let desk = read_database(&fixture("desk_db.json")).unwrap();
    let pmi = build_index(&desk, &IndexParams::default()).unwrap();
    let q = read_query(&fixture("query_triangle_abc.json")).unwrap();
    let relaxed = relax_query(&q.query.to_graph().unwrap(), q.delta, &RelaxOptions::default()).unwrap();
    let patterns: Vec<DetGraph> = pmi.features.iter().map(|f| f.pattern.clone()).collect();
    let containment = Containment::new(&patterns, &relaxed);
    let mut absent = 0;
    let mut absent_ok = true;
    for (c, id) in pmi.columns.iter().enumerate() {
        let listed: Vec<usize> = pmi.column(id).unwrap().into_iter().map(|(f, _)| f).collect();
        let up = build_upper_instance(relaxed.len(), &containment, &pmi, c);
        let low = build_lower_instance(relaxed.len(), &containment, &pmi, c);
        for f in 0..pmi.features.len() {
            if let PmiEntry::Absent = pmi.entry(f, c) {
                absent += 1;
                absent_ok &= pmi.entry(f, c).bounds() == (0.0, 0.0)
                    && !listed.contains(&f)
                    && up.sets.iter().chain(&low.sets).all(|s| s.feature != f);
            }
        }
    }
    pass &= absent_ok && absent > 0;
    notes.push(format!("{absent} absent entries honored: {absent_ok}"));
    outcome(pass, notes.join("; "))
}

/// Corpora, indexes and queries shared by the pruning and end-to-end checks.
fn pruning_suite() -> Vec<(Database, Pmi, Vec<TpsQuery>)> {
    let modes = [TableMode::Independent, TableMode::RandomCorrelated, TableMode::MaxTransform];
    let params = IndexParams {
        mining: MiningParams {
            max_vertices: 4,
            ..MiningParams::default()
        },
        ..IndexParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..6u64)
        .map(|i| {
            let db = small_corpus(25, 500 + i, modes[i as usize % 3]);
            let pmi = build_index(&db, &params).unwrap();
            let queries = (0..10)
                .map(|_| {
                    let q = random_query(&mut rng, db.graphs());
                    let delta = rng.random_range(0..=2usize).min(q.edge_count());
                    let eps = [0.2, 0.4, 0.6, 0.8][rng.random_range(0..4)];
                    TpsQuery::new(q, delta, eps).unwrap()
                })
                .collect();
            (db, pmi, queries)
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let (mut rejected, mut false_rejections, mut pruned_nonzero, mut graphs_seen) = (0usize, 0usize, 0usize, 0usize);
    for (db, pmi, queries) in pruning_suite() {
        for query in &queries {
            let (_, report) = run_query(&db, &pmi, query, &QueryParams::default()).unwrap();
            let oracle = oracle_for(&query.q);
            for g in db.graphs() {
                graphs_seen += 1;
                let ssp = exact_ssp(g, &oracle, query.delta, ORACLE_CAP).unwrap();
                let r = report.graphs.iter().find(|r| r.id == g.id());
                match r {
                    None => pruned_nonzero += (ssp > 0.0) as usize,
                    Some(r) if r.decision == Decision::Rejected => {
                        assert!(r.bounds.u_sim.is_some());
                        rejected += 1;
                        false_rejections += (ssp >= query.epsilon) as usize;
                    }
                    Some(_) => {}
                }
            }
        }
    }
    outcome(
        false_rejections == 0 && pruned_nonzero == 0 && rejected > 0,
        format!(
            "{graphs_seen} (graph, query) cases; {rejected} bound rejections, {false_rejections} with oracle SSP >= epsilon; \
             structurally pruned with SSP > 0: {pruned_nonzero}"
        ),
    )
}

/// Random instance over `u` elements with every element in some set.
fn random_instance(rng: &mut ChaCha8Rng, u: usize, max_sets: usize) -> CoverInstance {
    let n = rng.random_range(1..=max_sets);
    let mut members: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let k = rng.random_range(1..=u);
            (0..k).map(|_| rng.random_range(0..u)).collect()
        })
        .collect();
    for e in 0..u {
        if !members.iter().any(|m| m.contains(&e)) {
            let s = rng.random_range(0..n);
            members[s].push(e);
        }
    }
    let mut inst = CoverInstance::new(u);
    for (i, m) in members.into_iter().enumerate() {
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        inst.push(i, m, a.min(b), a.max(b));
    }
    inst
}

fn criterion_6() -> Outcome {
    let mut rows = Vec::new();
    let mut pass = true;
    for u in 3..=8usize {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + u as u64);
        let trials = 1000;
        let mut covered = 0;
        for t in 0..trials {
            let inst = random_instance(&mut rng, u, 8);
            let sol = solve_relaxed_qp(&inst);
            covered += randomized_round(&sol.x, &inst, t as u64).covered as usize;
        }
        let rate = covered as f64 / trials as f64;
        let need = 1.0 - 1.0 / u as f64 - 0.05;
        pass &= rate >= need;
        rows.push(format!("|U|={u}: {rate:.3} (need {need:.3})"));
    }
    outcome(pass, rows.join(", "))
}

fn criterion_7() -> Outcome {
    let graphs = mixed_corpus(120, 707);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut multi, mut single) = (Vec::new(), Vec::new());
    let mut tries = 0;
    while (multi.len() < 12 || single.len() < 6) && tries < 5000 {
        tries += 1;
        let g = &graphs[rng.random_range(0..graphs.len())];
        let q = random_query(&mut rng, &graphs);
        let delta = rng.random_range(0..=1usize).min(q.edge_count() - 1);
        let exact = exact_ssp(g, &oracle_for(&q), delta, ORACLE_CAP).unwrap();
        if exact < 0.1 {
            continue;
        }
        let relaxed = relax_query(&q, delta, &RelaxOptions::default()).unwrap();
        let events = embedding_events(&relaxed, g.skeleton()).0.len();
        match events {
            1 if single.len() < 6 => single.push((g, relaxed, exact)),
            n if n >= 2 && multi.len() < 12 => multi.push((g, relaxed, exact)),
            _ => {}
        }
    }
    let mut pass = multi.len() >= 10 && !single.is_empty();
    let mut worst = 100;
    for (g, relaxed, exact) in &multi {
        let within = (0..100u64)
            .filter(|&s| {
                let est = verify_ssp_sampled(g, relaxed, 0.1, 0.05, s).unwrap().estimate;
                (est - exact).abs() <= 0.1 * exact
            })
            .count();
        worst = worst.min(within);
        pass &= within >= 95;
    }
    let mut single_ok = true;
    for (g, relaxed, exact) in &single {
        let est = verify_ssp_sampled(g, relaxed, 0.1, 0.05, 3).unwrap();
        single_ok &= est.events == 1 && (est.estimate - exact).abs() < 1e-9;
    }
    pass &= single_ok;
    outcome(
        pass,
        format!(
            "{} multi-event instances, fewest runs within 10%: {worst}/100; {} single-event instances exact: {single_ok}",
            multi.len(),
            single.len()
        ),
    )
}

fn optimum(inst: &CoverInstance) -> f64 {
    let n = inst.sets.len();
    (0u32..1 << n)
        .filter_map(|mask| {
            let sel: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            inst.covers(&sel).then(|| sel.iter().map(|&i| inst.sets[i].w_upper).sum::<f64>())
        })
        .min_by(f64::total_cmp)
        .expect("instances are coverable")
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut checked, mut over_ln, mut over_h) = (0usize, 0usize, 0usize);
    let mut worst_ratio = 0.0f64;
    let mut example = None;
    for u in 3..=8usize {
        for _ in 0..2000 {
            let inst = random_instance(&mut rng, u, 10);
            let greedy = greedy_cover_upper(&inst).unwrap().weight;
            let opt = optimum(&inst);
            let h: f64 = (1..=u).map(|k| 1.0 / k as f64).sum();
            if opt > 0.0 {
                worst_ratio = worst_ratio.max(greedy / opt);
            }
            if greedy > (u as f64).ln() * opt + 1e-12 {
                over_ln += 1;
                example.get_or_insert((u, greedy, opt));
            }
            if greedy > h * opt + 1e-12 {
                over_h += 1;
            }
            checked += 1;
        }
    }
    let ex = example.map_or(String::new(), |(u, g, o)| format!("; first: |U|={u} greedy {g:.4} opt {o:.4}"));
    outcome(
        over_ln == 0,
        format!(
            "{checked} instances (|U| 3..8, up to 10 sets); greedy > ln|U|*opt on {over_ln}, > H(|U|)*opt on {over_h}; \
             worst ratio {worst_ratio:.3}{ex}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let desk = read_database(&fixture("desk_db.json")).unwrap();
    let extra = small_corpus(27, 909, TableMode::RandomCorrelated);
    let db = Database::new(desk.graphs().iter().chain(extra.graphs()).cloned().collect()).unwrap();
    let pmi = build_index(&db, &IndexParams::default()).unwrap();

    let mut queries = Vec::new();
    for name in ["query_triangle_abc.json", "query_path_axa.json"] {
        queries.push(TpsQuery::from_document(&read_query(&fixture(name)).unwrap()).unwrap());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    while queries.len() < 12 {
        let q = random_query(&mut rng, db.graphs());
        let delta = rng.random_range(0..=2usize).min(q.edge_count());
        let eps = [0.2, 0.4, 0.6, 0.8][rng.random_range(0..4)];
        queries.push(TpsQuery::new(q, delta, eps).unwrap());
    }

    let (mut sampled_bad, mut exact_bad, mut flagged, mut answers) = (0usize, 0usize, 0usize, 0usize);
    for (i, query) in queries.iter().enumerate() {
        let oracle = oracle_for(&query.q);
        let truth: BTreeSet<String> = db
            .graphs()
            .iter()
            .filter(|g| exact_ssp(g, &oracle, query.delta, ORACLE_CAP).unwrap() >= query.epsilon)
            .map(|g| g.id().to_string())
            .collect();
        answers += truth.len();

        let sampled = QueryParams {
            exact_verify: false,
            oracle_cap: 0,
            seed: i as u64,
            ..QueryParams::default()
        };
        let (got, report) = run_query(&db, &pmi, query, &sampled).unwrap();
        let got: BTreeSet<String> = got.into_iter().collect();
        let margin: BTreeSet<&String> = report.margin_flagged.iter().collect();
        flagged += margin.len();
        sampled_bad += got.symmetric_difference(&truth).filter(|id| !margin.contains(id)).count();

        let exact = QueryParams {
            exact_verify: true,
            seed: i as u64,
            ..QueryParams::default()
        };
        let (got, _) = run_query(&db, &pmi, query, &exact).unwrap();
        exact_bad += got.into_iter().collect::<BTreeSet<_>>().symmetric_difference(&truth).count();
    }
    outcome(
        sampled_bad == 0 && exact_bad == 0,
        format!(
            "{} graphs x {} queries, {answers} true answers; sampled verification: {sampled_bad} unexplained differences \
             ({flagged} margin-flagged); exact verification: {exact_bad} differences",
            db.len(),
            queries.len()
        ),
    )
}

fn criterion_10() -> Outcome {
    let cfg = GeneratorConfig {
        graphs: 1000,
        min_vertices: 30,
        max_vertices: 30,
        edge_ratio: 1.5,
        seed: 1,
        ..GeneratorConfig::default()
    };
    let db = generate(&cfg).unwrap();
    let edges = db.graphs().iter().map(|g| g.edge_count()).sum::<usize>() as f64 / db.len() as f64;
    let t = Instant::now();
    let pmi = build_index(&db, &IndexParams::default()).unwrap();
    let index_secs = t.elapsed().as_secs_f64();

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut times = Vec::new();
    let mut monotone = true;
    for size in [4, 8, 12] {
        let mut made = 0;
        while made < 3 {
            let source = &db.graphs()[rng.random_range(0..db.len())];
            let Some(q) = sample_query(source.skeleton(), size, &mut rng) else {
                continue;
            };
            made += 1;
            let query = TpsQuery::new(q, 1, 0.5).unwrap();
            let t = Instant::now();
            let (_, report) = run_query(&db, &pmi, &query, &QueryParams::default()).unwrap();
            times.push(t.elapsed().as_secs_f64());
            let s = report.stages;
            monotone &= s.database >= s.structural && s.structural >= s.candidates && s.candidates >= s.answers;
        }
    }
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];
    outcome(
        index_secs < 300.0 && median < 10.0 && monotone,
        format!(
            "{} graphs, {edges:.1} edges on average, {} features; index {index_secs:.1}s; median query {median:.3}s \
             over {} queries; stage counts monotone: {monotone}",
            db.len(),
            pmi.features.len(),
            times.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "oracle identities", criterion_1),
        (2, "SIP bounds bracket the exact value", criterion_2),
        (3, "cut/embedding duality", criterion_3),
        (4, "worked-example regressions", criterion_4),
        (5, "no false rejections", criterion_5),
        (6, "rounding coverage", criterion_6),
        (7, "sampled verification accuracy", criterion_7),
        (8, "greedy cover quality", criterion_8),
        (9, "end-to-end answers", criterion_9),
        (10, "scale", criterion_10),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (mut failed, mut known) = (Vec::new(), Vec::new());
    for (n, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} {status} ({name}, {:.1}s): {}",
            start.elapsed().as_secs_f64(),
            result.detail
        );
        match KNOWN_FAILURES.iter().find(|(k, _)| *k == n) {
            Some((_, why)) if !result.pass => {
                println!("             known failure: {why}");
                known.push(n);
            }
            Some(_) => println!("             listed as a known failure but passed"),
            None if !result.pass => failed.push(n),
            None => {}
        }
    }
    println!("failed: {failed:?}; known failures: {known:?}");
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
