//! Weighted set-cover instances over relaxed queries, the greedy upper
//! bound, and the relaxed quadratic program with randomized rounding used
//! for the lower bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One feature's set of relaxed-query indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSet {
    pub feature: usize,
    /// Sorted, non-empty.
    pub members: Vec<usize>,
    /// Lower weight; unused by upper-bound instances.
    pub w_lower: f64,
    pub w_upper: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverInstance {
    /// Number of relaxed queries; elements are `0..universe`.
    pub universe: usize,
    pub sets: Vec<CoverSet>,
}

impl CoverInstance {
    pub fn new(universe: usize) -> Self {
        CoverInstance {
            universe,
            sets: Vec::new(),
        }
    }

    /// Adds a set unless it is empty.
    pub fn push(&mut self, feature: usize, mut members: Vec<usize>, w_lower: f64, w_upper: f64) {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return;
        }
        debug_assert!(members.iter().all(|&m| m < self.universe));
        self.sets.push(CoverSet {
            feature,
            members,
            w_lower: w_lower.clamp(0.0, 1.0),
            w_upper: w_upper.clamp(0.0, 1.0),
        });
    }

    /// Marks which elements lie in at least one set.
    pub fn coverable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.universe];
        for s in &self.sets {
            for &m in &s.members {
                seen[m] = true;
            }
        }
        seen
    }

    pub fn covers(&self, selected: &[usize]) -> bool {
        let mut seen = vec![false; self.universe];
        for &i in selected {
            for &m in &self.sets[i].members {
                seen[m] = true;
            }
        }
        seen.into_iter().all(|b| b)
    }

    /// `sum w_L - sum_{i<j} w_U(i) w_U(j)` over the selected sets.
    pub fn pair_objective(&self, selected: &[usize]) -> f64 {
        let x: Vec<f64> = (0..self.sets.len())
            .map(|i| selected.contains(&i) as u8 as f64)
            .collect();
        self.qp_objective(&x)
    }

    /// The relaxed objective at a fractional point.
    pub fn qp_objective(&self, x: &[f64]) -> f64 {
        let linear: f64 = x.iter().zip(&self.sets).map(|(xi, s)| xi * s.w_lower).sum();
        // sum_{i<j} a_i a_j = ((sum a)^2 - sum a^2) / 2
        let a: Vec<f64> = x.iter().zip(&self.sets).map(|(xi, s)| xi * s.w_upper).collect();
        let sum: f64 = a.iter().sum();
        let sq: f64 = a.iter().map(|v| v * v).sum();
        linear - (sum * sum - sq) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    pub selected: Vec<usize>,
    pub weight: f64,
}

/// Greedy weighted set cover: repeatedly takes the set minimizing weight per
/// newly covered element. `None` when the sets do not cover the universe.
pub fn greedy_cover_upper(inst: &CoverInstance) -> Option<CoverResult> {
    if inst.coverable().iter().any(|c| !c) {
        return None;
    }
    let mut covered = vec![false; inst.universe];
    let mut left = inst.universe;
    let mut selected = Vec::new();
    let mut weight = 0.0;
    while left > 0 {
        let mut best: Option<(f64, usize)> = None;
        for (i, s) in inst.sets.iter().enumerate() {
            let fresh = s.members.iter().filter(|&&m| !covered[m]).count();
            if fresh == 0 {
                continue;
            }
            let gamma = s.w_upper / fresh as f64;
            if best.is_none_or(|(g, _)| gamma < g) {
                best = Some((gamma, i));
            }
        }
        let (_, i) = best.expect("coverable universe");
        for &m in &inst.sets[i].members {
            if !covered[m] {
                covered[m] = true;
                left -= 1;
            }
        }
        weight += inst.sets[i].w_upper;
        selected.push(i);
    }
    selected.sort_unstable();
    Some(CoverResult { selected, weight })
}

pub const QP_STARTS: usize = 8;
pub const QP_ITERATIONS: usize = 500;
pub const QP_STEP: f64 = 0.05;
const REPAIR_PASSES: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Elements in no set; their coverage constraints were dropped.
    pub dropped: Vec<usize>,
}

/// Coverage constraints as lists of set indices, one per coverable element.
fn constraints(inst: &CoverInstance) -> Vec<Vec<usize>> {
    let mut by_elem = vec![Vec::new(); inst.universe];
    for (i, s) in inst.sets.iter().enumerate() {
        for &m in &s.members {
            by_elem[m].push(i);
        }
    }
    by_elem.into_iter().filter(|c| !c.is_empty()).collect()
}

/// Clamps to the box, then raises variables of violated constraints in
/// turn until every constraint holds.
fn repair(x: &mut [f64], cons: &[Vec<usize>]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    for _ in 0..REPAIR_PASSES {
        let mut ok = true;
        for c in cons {
            let sum: f64 = c.iter().map(|&i| x[i]).sum();
            if sum >= 1.0 - 1e-12 {
                continue;
            }
            ok = false;
            let open: Vec<usize> = c.iter().copied().filter(|&i| x[i] < 1.0).collect();
            let share = (1.0 - sum) / open.len() as f64;
            for i in open {
                x[i] = (x[i] + share).min(1.0);
            }
        }
        if ok {
            return;
        }
    }
    for c in cons {
        if c.iter().map(|&i| x[i]).sum::<f64>() < 1.0 - 1e-12 {
            for &i in c {
                x[i] = 1.0;
            }
        }
    }
}

fn feasible(x: &[f64], cons: &[Vec<usize>]) -> bool {
    x.iter().all(|v| (0.0..=1.0).contains(v))
        && cons.iter().all(|c| c.iter().map(|&i| x[i]).sum::<f64>() >= 1.0 - 1e-9)
}

/// Multi-start projected gradient ascent on the relaxed objective subject to
/// the box and the coverage constraints. Deterministic.
pub fn solve_relaxed_qp(inst: &CoverInstance) -> QpSolution {
    let n = inst.sets.len();
    let dropped: Vec<usize> = inst
        .coverable()
        .iter()
        .enumerate()
        .filter(|(_, c)| !**c)
        .map(|(i, _)| i)
        .collect();
    if n == 0 {
        return QpSolution {
            x: Vec::new(),
            objective: 0.0,
            dropped,
        };
    }
    let cons = constraints(inst);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0e5);
    let mut starts = vec![vec![1.0; n], vec![0.5; n], vec![0.0; n]];
    while starts.len() < QP_STARTS {
        starts.push((0..n).map(|_| rng.random::<f64>()).collect());
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |x: &[f64]| {
        if !feasible(x, &cons) {
            return;
        }
        let obj = inst.qp_objective(x);
        if best.as_ref().is_none_or(|(b, _)| obj > *b) {
            best = Some((obj, x.to_vec()));
        }
    };
    for mut x in starts {
        repair(&mut x, &cons);
        consider(&x);
        for _ in 0..QP_ITERATIONS {
            let total: f64 = x.iter().zip(&inst.sets).map(|(v, s)| v * s.w_upper).sum();
            let grad: Vec<f64> = x
                .iter()
                .zip(&inst.sets)
                .map(|(v, s)| s.w_lower - s.w_upper * (total - v * s.w_upper))
                .collect();
            for (v, g) in x.iter_mut().zip(grad) {
                *v += QP_STEP * g;
            }
            repair(&mut x, &cons);
            consider(&x);
        }
    }
    let (objective, x) = best.expect("the all-ones point is feasible");
    QpSolution { x, objective, dropped }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rounding {
    pub selected: Vec<usize>,
    pub rounds: usize,
    /// Whether the selected sets cover every coverable element.
    pub covered: bool,
    pub l_sim: f64,
}

/// `ceil(2 ln |U|)`, at least 1.
pub fn rounding_rounds(universe: usize) -> usize {
    if universe <= 1 {
        return 1;
    }
    ((2.0 * (universe as f64).ln()).ceil() as usize).max(1)
}

/// Picks each set independently with probability `x[s]` per round, keeping
/// earlier picks, then scores the picked sets.
pub fn randomized_round(x: &[f64], inst: &CoverInstance, seed: u64) -> Rounding {
    let rounds = rounding_rounds(inst.universe);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = vec![false; inst.sets.len()];
    for _ in 0..rounds {
        for (i, p) in picked.iter_mut().enumerate() {
            let draw: f64 = rng.random();
            if !*p && draw < x[i] {
                *p = true;
            }
        }
    }
    let selected: Vec<usize> = (0..picked.len()).filter(|&i| picked[i]).collect();
    let coverable = inst.coverable();
    let mut seen = vec![false; inst.universe];
    for &i in &selected {
        for &m in &inst.sets[i].members {
            seen[m] = true;
        }
    }
    let covered = seen.iter().zip(&coverable).all(|(s, c)| *s || !*c);
    let l_sim = if selected.is_empty() {
        0.0
    } else {
        inst.pair_objective(&selected).clamp(0.0, 1.0)
    };
    Rounding {
        selected,
        rounds,
        covered,
        l_sim,
    }
}
