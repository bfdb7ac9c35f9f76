mod common;

use common::{mass, small_corpus, world_weights};
use pgsim_core::io::generator::TableMode;
use pgsim_core::prob::{EdgeEvent, ProbGraph, WorldAssignment};
use pgsim_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [TableMode; 3] = [TableMode::Independent, TableMode::RandomCorrelated, TableMode::MaxTransform];

fn random_event(rng: &mut impl Rng, m: usize, present: bool) -> EdgeEvent {
    let k = rng.random_range(1..=m.min(3));
    let edges: Vec<usize> = (0..k).map(|_| rng.random_range(0..m)).collect();
    if present {
        EdgeEvent::all_present(edges)
    } else {
        EdgeEvent::all_absent(edges)
    }
}

#[test]
fn elimination_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (i, mode) in MODES.into_iter().enumerate() {
        for g in small_corpus(20, 40 + i as u64, mode).graphs() {
            let m = g.edge_count();
            assert!(m <= 12);
            for _ in 0..5 {
                let present = rng.random_bool(0.5);
                let ev = random_event(&mut rng, m, present);
                let want = mass(g, |p| ev.holds(p));
                assert!((g.event_prob(&ev).unwrap() - want).abs() < 1e-9);

                let blockers: Vec<EdgeEvent> = (0..2).map(|_| random_event(&mut rng, m, true)).collect();
                let none = mass(g, |p| !blockers.iter().any(|b| b.holds(p)));
                assert!((g.none_prob(&blockers).unwrap() - none).abs() < 1e-9);

                match g.cond_prob(&ev, &blockers) {
                    Ok(c) => {
                        let joint = mass(g, |p| ev.holds(p) && !blockers.iter().any(|b| b.holds(p)));
                        assert!((c - joint / none).abs() < 1e-9);
                    }
                    Err(Error::ZeroProbabilityCondition) => assert!(none < 1e-12),
                    Err(e) => panic!("unexpected error {e}"),
                }
            }
        }
    }
}

#[test]
fn world_weights_are_normalized_row_products() {
    for mode in MODES {
        for g in small_corpus(10, 77, mode).graphs() {
            let oracle = world_weights(g);
            let total: f64 = oracle.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-9);
            for (present, w) in oracle.iter().step_by(7) {
                let got = g.world_weight(&WorldAssignment::new(present.clone()));
                assert!((got - w).abs() < 1e-12);
            }
            let mut enumerated = 0.0;
            g.for_each_world(20, |_, w| enumerated += w).unwrap();
            assert!((enumerated - 1.0).abs() < 1e-9);
        }
    }
}

/// Pearson statistic of sampled world counts against the exact weights,
/// pooling worlds with expected count below 5.
fn chi_square(g: &ProbGraph, draws: impl Fn(u64) -> WorldAssignment, n: usize, weights: &[(Vec<bool>, f64)]) -> (f64, usize) {
    let m = g.edge_count();
    let mut counts = vec![0usize; 1 << m];
    for s in 0..n as u64 {
        let w = draws(s);
        let mask = (0..m).filter(|&e| w.present(e)).fold(0usize, |acc, e| acc | 1 << e);
        counts[mask] += 1;
    }
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (mask, (_, p)) in weights.iter().enumerate() {
        let exp = p * n as f64;
        if exp < 5.0 {
            pooled_obs += counts[mask] as f64;
            pooled_exp += exp;
            continue;
        }
        stat += (counts[mask] as f64 - exp).powi(2) / exp;
        cells += 1;
    }
    if pooled_exp >= 5.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    (stat, cells.saturating_sub(1))
}

/// Upper 0.1% critical value via the Wilson–Hilferty approximation.
fn chi_critical(dof: usize) -> f64 {
    let k = dof.max(1) as f64;
    let z = 3.09;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

#[test]
fn world_sampler_passes_chi_square() {
    let mut tested = 0;
    for (i, mode) in MODES.into_iter().enumerate() {
        let db = small_corpus(12, 90 + i as u64, mode);
        for g in db.graphs().iter().filter(|g| g.edge_count() <= 6) {
            let weights = world_weights(g);
            let (stat, dof) = chi_square(g, |s| g.sample_world(s), 20_000, &weights);
            assert!(stat < chi_critical(dof), "{}: chi2 {stat:.1} on {dof} dof", g.id());
            tested += 1;
        }
    }
    assert!(tested >= 3, "only {tested} graphs with at most 6 edges");
}

#[test]
fn conditional_sampler_passes_chi_square() {
    let mut tested = 0;
    for (i, mode) in MODES.into_iter().enumerate() {
        let db = small_corpus(12, 95 + i as u64, mode);
        for g in db.graphs().iter().filter(|g| g.edge_count() <= 6) {
            let ev = EdgeEvent::all_present([0]);
            let p = mass(g, |w| ev.holds(w));
            if p < 1e-6 {
                continue;
            }
            let weights: Vec<(Vec<bool>, f64)> = world_weights(g)
                .into_iter()
                .map(|(w, x)| {
                    let keep = ev.holds(&w);
                    (w, if keep { x / p } else { 0.0 })
                })
                .collect();
            let sampler = g.conditional_sampler(&ev).unwrap();
            let draws = |s: u64| sampler.sample(&mut ChaCha8Rng::seed_from_u64(s));
            let (stat, dof) = chi_square(g, draws, 20_000, &weights);
            assert!(stat < chi_critical(dof), "{}: chi2 {stat:.1} on {dof} dof", g.id());
            tested += 1;
        }
    }
    assert!(tested >= 3);
}
