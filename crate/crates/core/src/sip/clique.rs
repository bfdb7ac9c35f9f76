//! Maximum weight cliques on compatibility graphs.

/// Node-weighted undirected graph. Nodes are event-family members; a link
/// joins two members that share no edge.
#[derive(Clone, Debug, Default)]
pub struct CompatibilityGraph {
    weights: Vec<f64>,
    adj: Vec<Vec<bool>>,
}

impl CompatibilityGraph {
    pub fn new(weights: Vec<f64>) -> Self {
        let n = weights.len();
        CompatibilityGraph {
            weights,
            adj: vec![vec![false; n]; n],
        }
    }

    pub fn link(&mut self, i: usize, j: usize) {
        if i != j {
            self.adj[i][j] = true;
            self.adj[j][i] = true;
        }
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn linked(&self, i: usize, j: usize) -> bool {
        self.adj[i][j]
    }

    pub fn is_clique(&self, nodes: &[usize]) -> bool {
        nodes
            .iter()
            .enumerate()
            .all(|(k, &i)| nodes[k + 1..].iter().all(|&j| self.adj[i][j]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clique {
    /// Sorted node indices.
    pub nodes: Vec<usize>,
    pub weight: f64,
    /// False when the node cap or search budget forced a heuristic answer.
    pub optimal: bool,
}

pub const DEFAULT_CLIQUE_CAP: usize = 64;

/// Branch-and-bound nodes explored before giving up on optimality.
const SEARCH_BUDGET: usize = 2_000_000;

struct Search<'a> {
    g: &'a CompatibilityGraph,
    nbr: Vec<u64>,
    current: Vec<usize>,
    best: Vec<usize>,
    best_weight: f64,
    visited: usize,
}

impl Search<'_> {
    fn expand(&mut self, candidates: u64, weight: f64) {
        self.visited += 1;
        if weight > self.best_weight {
            self.best_weight = weight;
            self.best = self.current.clone();
        }
        if self.visited > SEARCH_BUDGET {
            return;
        }
        let mut rest = candidates;
        while rest != 0 {
            let bound: f64 = weight + bits(rest).map(|v| self.g.weights[v]).sum::<f64>();
            if bound <= self.best_weight {
                return;
            }
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            self.current.push(v);
            self.expand(rest & self.nbr[v], weight + self.g.weights[v]);
            self.current.pop();
        }
    }
}

fn bits(mut x: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if x == 0 {
            return None;
        }
        let v = x.trailing_zeros() as usize;
        x &= x - 1;
        Some(v)
    })
}

/// Maximum total weight clique. Exact branch and bound up to `cap` nodes
/// (at most 64); ties go to the lexicographically smallest node set. Larger
/// graphs get a greedy clique flagged as non-optimal.
pub fn max_weight_clique(g: &CompatibilityGraph, cap: usize) -> Clique {
    let n = g.node_count();
    if n == 0 {
        return Clique {
            nodes: Vec::new(),
            weight: 0.0,
            optimal: true,
        };
    }
    if n > cap.min(64) {
        return greedy_clique(g);
    }
    let nbr = (0..n)
        .map(|i| (0..n).filter(|&j| g.adj[i][j]).fold(0u64, |m, j| m | 1 << j))
        .collect();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut search = Search {
        g,
        nbr,
        current: Vec::new(),
        best: Vec::new(),
        best_weight: f64::NEG_INFINITY,
        visited: 0,
    };
    search.expand(all, 0.0);
    let optimal = search.visited <= SEARCH_BUDGET;
    Clique {
        nodes: search.best,
        weight: search.best_weight.max(0.0),
        optimal,
    }
}

/// Repeatedly adds the heaviest node linked to everything chosen so far.
pub fn greedy_clique(g: &CompatibilityGraph) -> Clique {
    let n = g.node_count();
    let mut chosen: Vec<usize> = Vec::new();
    let mut open: Vec<bool> = vec![true; n];
    loop {
        let next = (0..n)
            .filter(|&v| open[v])
            .fold(None, |best: Option<usize>, v| match best {
                Some(b) if g.weights[b] >= g.weights[v] => Some(b),
                _ => Some(v),
            });
        let Some(v) = next else { break };
        chosen.push(v);
        for (u, o) in open.iter_mut().enumerate() {
            *o = *o && g.adj[v][u];
        }
    }
    chosen.sort_unstable();
    let weight = chosen.iter().map(|&v| g.weights[v]).sum();
    Clique {
        nodes: chosen,
        weight,
        optimal: false,
    }
}
