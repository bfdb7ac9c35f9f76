//! Binary factors and bucket elimination.
//!
//! Every variable is an edge presence bit. Factors store one value per
//! assignment of their (sorted) scope, bit `i` of the row index holding the
//! value of `vars[i]`. Elimination keeps the bucket product of every
//! eliminated variable, which is what exact forward sampling needs.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct Factor {
    pub vars: Vec<usize>,
    pub values: Vec<f64>,
}

impl Factor {
    pub fn constant(value: f64) -> Self {
        Factor {
            vars: Vec::new(),
            values: vec![value],
        }
    }

    /// Builds a factor from a scope in arbitrary order, reindexing rows to
    /// the sorted scope.
    pub fn from_unsorted(vars: &[usize], values: &[f64]) -> Self {
        let mut sorted: Vec<usize> = vars.to_vec();
        sorted.sort_unstable();
        let perm: Vec<usize> = vars
            .iter()
            .map(|v| sorted.binary_search(v).expect("var present"))
            .collect();
        let mut out = vec![0.0; values.len()];
        for (row, &val) in values.iter().enumerate() {
            let mut idx = 0usize;
            for (i, &p) in perm.iter().enumerate() {
                if row >> i & 1 == 1 {
                    idx |= 1 << p;
                }
            }
            out[idx] = val;
        }
        Factor {
            vars: sorted,
            values: out,
        }
    }

    /// Indicator over `vars` that is zero exactly on the assignment `forbidden`
    /// (all ones or all zeros).
    pub fn forbid_uniform(vars: &[usize], forbidden: bool) -> Self {
        let mut sorted = vars.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let size = 1usize << sorted.len();
        let mut values = vec![1.0; size];
        values[if forbidden { size - 1 } else { 0 }] = 0.0;
        Factor {
            vars: sorted,
            values,
        }
    }

    /// Fixes every variable of the scope that has a value in `fixed`.
    fn restrict_all(self, fixed: &[Option<bool>]) -> Factor {
        if self.vars.iter().all(|&v| fixed[v].is_none()) {
            return self;
        }
        let mut base = 0usize;
        let mut kept_bits = Vec::new();
        let mut vars = Vec::new();
        for (i, &v) in self.vars.iter().enumerate() {
            match fixed[v] {
                Some(true) => base |= 1 << i,
                Some(false) => {}
                None => {
                    kept_bits.push(i);
                    vars.push(v);
                }
            }
        }
        let values = (0..1usize << vars.len())
            .map(|row| {
                let full = kept_bits
                    .iter()
                    .enumerate()
                    .fold(base, |acc, (j, &b)| acc | (row >> j & 1) << b);
                self.values[full]
            })
            .collect();
        Factor { vars, values }
    }

    /// Value at the assignment given by `state` (indexed by variable).
    pub fn eval(&self, state: &[bool]) -> f64 {
        let mut idx = 0usize;
        for (i, &v) in self.vars.iter().enumerate() {
            if state[v] {
                idx |= 1 << i;
            }
        }
        self.values[idx]
    }
}

const CHUNK_BITS: usize = 8;

/// Maps a row over `scope` to the row of one factor, 8 scope bits at a time.
struct RowMap {
    chunks: Vec<Vec<u32>>,
}

impl RowMap {
    fn new(vars: &[usize], scope: &[usize]) -> Self {
        // bit_of[p]: the factor row bit set by scope position p, if any
        let mut bit_of = vec![0u32; scope.len()];
        for (i, v) in vars.iter().enumerate() {
            bit_of[scope.binary_search(v).expect("scope covers factor")] = 1 << i;
        }
        let chunks = bit_of
            .chunks(CHUNK_BITS)
            .map(|bits| {
                let mut table = vec![0u32; 1 << bits.len()];
                for row in 1..table.len() {
                    let low = row.trailing_zeros() as usize;
                    table[row] = table[row & (row - 1)] | bits[low];
                }
                table
            })
            .collect();
        RowMap { chunks }
    }

    #[inline]
    fn index(&self, row: usize) -> usize {
        let mut idx = 0u32;
        for (c, table) in self.chunks.iter().enumerate() {
            idx |= table[row >> (c * CHUNK_BITS) & (table.len() - 1)];
        }
        idx as usize
    }
}

/// Product of `factors` over the union of their scopes.
fn product(factors: &[&Factor], scope: &[usize]) -> Factor {
    let maps: Vec<RowMap> = factors.iter().map(|f| RowMap::new(&f.vars, scope)).collect();
    let mut values = vec![1.0; 1usize << scope.len()];
    for (f, map) in factors.iter().zip(&maps) {
        for (row, v) in values.iter_mut().enumerate() {
            if *v != 0.0 {
                *v *= f.values[map.index(row)];
            }
        }
    }
    Factor {
        vars: scope.to_vec(),
        values,
    }
}

fn sum_out(f: &Factor, var: usize) -> Factor {
    let pos = f.vars.binary_search(&var).expect("variable in scope");
    let mut vars = f.vars.clone();
    vars.remove(pos);
    let low_mask = (1usize << pos) - 1;
    let values = (0..1usize << vars.len())
        .map(|row| {
            let full = (row & low_mask) | ((row & !low_mask) << 1);
            f.values[full] + f.values[full | 1 << pos]
        })
        .collect();
    Factor { vars, values }
}

/// Outcome of eliminating every variable: the total mass and, per eliminated
/// variable, its bucket product.
#[derive(Clone, Debug)]
pub(crate) struct Elimination {
    pub total: f64,
    order: Vec<usize>,
    buckets: Vec<Factor>,
    evidence: Vec<(usize, bool)>,
    num_vars: usize,
}

/// Eliminates all variables of `factors` after fixing `evidence`, using a
/// greedy min-degree order. Fails when a bucket would span more than
/// `width_limit` variables.
pub(crate) fn eliminate(
    factors: Vec<Factor>,
    evidence: &[(usize, bool)],
    num_vars: usize,
    width_limit: usize,
) -> Result<Elimination> {
    run(factors, evidence, num_vars, width_limit, true)
}

/// Total mass only; bucket products are dropped as soon as they are summed.
pub(crate) fn eliminate_total(
    factors: Vec<Factor>,
    evidence: &[(usize, bool)],
    num_vars: usize,
    width_limit: usize,
) -> Result<f64> {
    run(factors, evidence, num_vars, width_limit, false).map(|e| e.total)
}

fn run(
    factors: Vec<Factor>,
    evidence: &[(usize, bool)],
    num_vars: usize,
    width_limit: usize,
    keep_buckets: bool,
) -> Result<Elimination> {
    let mut fixed: Vec<Option<bool>> = vec![None; num_vars];
    for &(v, val) in evidence {
        match fixed[v] {
            Some(prev) if prev != val => {
                return Ok(Elimination {
                    total: 0.0,
                    order: Vec::new(),
                    buckets: Vec::new(),
                    evidence: evidence.to_vec(),
                    num_vars,
                })
            }
            _ => fixed[v] = Some(val),
        }
    }
    let mut constant = 1.0;
    let mut live: Vec<Factor> = Vec::with_capacity(factors.len());
    for f in factors {
        let f = f.restrict_all(&fixed);
        if f.vars.is_empty() {
            constant *= f.values[0];
        } else {
            live.push(f);
        }
    }

    let mut order = Vec::new();
    let mut buckets = Vec::new();
    let mut remaining: Vec<bool> = vec![false; num_vars];
    for f in &live {
        for &v in &f.vars {
            remaining[v] = true;
        }
    }
    // Interaction graph as bitsets (each variable is its own neighbor),
    // updated with fill-in as variables are eliminated.
    let words = num_vars.div_ceil(64);
    let mut adj = vec![0u64; num_vars * words];
    for f in &live {
        for &v in &f.vars {
            let row = &mut adj[v * words..(v + 1) * words];
            for &u in &f.vars {
                row[u / 64] |= 1 << (u % 64);
            }
        }
    }
    loop {
        if constant == 0.0 {
            break;
        }
        let mut best: Option<(usize, usize)> = None;
        for v in (0..num_vars).filter(|&v| remaining[v]) {
            let row = &adj[v * words..(v + 1) * words];
            let degree = row.iter().map(|w| w.count_ones() as usize).sum::<usize>().saturating_sub(1);
            if best.is_none_or(|(d, _)| degree < d) {
                best = Some((degree, v));
            }
        }
        let Some((degree, var)) = best else { break };
        if degree + 1 > width_limit {
            return Err(Error::InferenceBudget {
                width: degree + 1,
                limit: width_limit,
            });
        }
        let mut clique = adj[var * words..(var + 1) * words].to_vec();
        clique[var / 64] &= !(1 << (var % 64));
        for u in (0..num_vars).filter(|&u| clique[u / 64] >> (u % 64) & 1 == 1) {
            let row = &mut adj[u * words..(u + 1) * words];
            for (w, c) in row.iter_mut().zip(&clique) {
                *w |= c;
            }
            row[var / 64] &= !(1 << (var % 64));
        }
        let (with, without): (Vec<Factor>, Vec<Factor>) = live
            .into_iter()
            .partition(|f| f.vars.binary_search(&var).is_ok());
        live = without;
        let mut scope: Vec<usize> = with.iter().flat_map(|f| f.vars.iter().copied()).collect();
        scope.sort_unstable();
        scope.dedup();
        let bucket = match <[Factor; 1]>::try_from(with) {
            Ok([single]) => single,
            Err(with) => {
                let refs: Vec<&Factor> = with.iter().collect();
                product(&refs, &scope)
            }
        };
        let message = sum_out(&bucket, var);
        remaining[var] = false;
        if keep_buckets {
            order.push(var);
            buckets.push(bucket);
        }
        if message.vars.is_empty() {
            constant *= message.values[0];
        } else {
            live.push(message);
        }
    }
    for f in &live {
        // Only reachable when the constant hit zero early.
        debug_assert!(constant == 0.0 || f.vars.is_empty());
    }
    Ok(Elimination {
        total: constant,
        order,
        buckets,
        evidence: evidence.to_vec(),
        num_vars,
    })
}

impl Elimination {
    /// Draws one joint assignment from the normalized product, sampling in
    /// reverse elimination order from each bucket's conditional.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        assert!(self.total > 0.0, "sampling from a zero-mass distribution");
        let mut state = vec![false; self.num_vars];
        for &(v, val) in &self.evidence {
            state[v] = val;
        }
        for (var, bucket) in self.order.iter().zip(&self.buckets).rev() {
            state[*var] = false;
            let w0 = bucket.eval(&state);
            state[*var] = true;
            let w1 = bucket.eval(&state);
            let z = w0 + w1;
            state[*var] = z > 0.0 && rng.random::<f64>() * z < w1;
        }
        state
    }
}
