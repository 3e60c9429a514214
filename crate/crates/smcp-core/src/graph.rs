//! Probabilistic graph model, realized instances, and the probe/commit
//! oracle that online algorithms run against.

use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

/// Unordered vertex pair, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    u: usize,
    v: usize,
}

impl Pair {
    /// Normalizes endpoint order. Panics on a self-loop; callers that take
    /// untrusted input validate first.
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "self-loop pair ({a},{b})");
        Pair {
            u: a.min(b),
            v: a.max(b),
        }
    }

    pub fn lo(&self) -> usize {
        self.u
    }

    pub fn hi(&self) -> usize {
        self.v
    }

    pub fn touches(&self, w: usize) -> bool {
        self.u == w || self.v == w
    }

    /// The endpoint other than `w`.
    pub fn other(&self, w: usize) -> usize {
        debug_assert!(self.touches(w));
        if self.u == w {
            self.v
        } else {
            self.u
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.u, self.v)
    }
}

/// The known input distribution: `n` vertices plus a sparse symmetric map
/// of per-pair edge probabilities. Absent pairs have probability zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbGraph {
    n: usize,
    p: BTreeMap<Pair, f64>,
}

impl ProbGraph {
    pub fn new(n: usize) -> Self {
        ProbGraph {
            n,
            p: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sets `p_uv`. A zero probability removes the pair from the sparse map.
    pub fn set_p(&mut self, a: usize, b: usize, p: f64) -> Result<()> {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        for w in [a, b] {
            if w >= self.n {
                return Err(Error::VertexOutOfRange { vertex: w, n: self.n });
            }
        }
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::InvalidProbability(p));
        }
        let pair = Pair::new(a, b);
        if p > 0.0 {
            self.p.insert(pair, p);
        } else {
            self.p.remove(&pair);
        }
        Ok(())
    }

    /// Removes a pair (used when a probe finds it absent).
    pub fn zero_pair(&mut self, pair: Pair) {
        self.p.remove(&pair);
    }

    /// Removes every pair touching `w` (used when `w` gets matched).
    pub fn remove_vertex(&mut self, w: usize) {
        self.p.retain(|pair, _| !pair.touches(w));
    }

    pub fn p(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        self.p.get(&Pair::new(a, b)).copied().unwrap_or(0.0)
    }

    pub fn p_pair(&self, pair: Pair) -> f64 {
        self.p.get(&pair).copied().unwrap_or(0.0)
    }

    /// Pairs with positive probability, in ascending `Pair` order.
    pub fn positive_pairs(&self) -> impl Iterator<Item = (Pair, f64)> + '_ {
        self.p.iter().map(|(&pair, &p)| (pair, p))
    }

    pub fn num_positive_pairs(&self) -> usize {
        self.p.len()
    }

    /// Neighbors of `u` along positive-probability pairs, ascending.
    pub fn neighbors(&self, u: usize) -> Vec<usize> {
        self.p
            .keys()
            .filter(|pair| pair.touches(u))
            .map(|pair| pair.other(u))
            .collect()
    }

    /// Draws one realized graph: each positive pair is included
    /// independently with its probability.
    pub fn sample_realization<R: Rng>(&self, rng: &mut R) -> RealizedGraph {
        let mut edges = BTreeSet::new();
        for (pair, p) in self.positive_pairs() {
            if rng.gen::<f64>() < p {
                edges.insert(pair);
            }
        }
        RealizedGraph { n: self.n, edges }
    }

    /// 2-colors the positive-probability support. Returns the vertex set of
    /// one side (per connected component, the side containing the smallest
    /// vertex), or an error if some component has an odd cycle.
    pub fn bipartition(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let mut color: Vec<Option<bool>> = vec![None; self.n];
        let adj: Vec<Vec<usize>> = (0..self.n).map(|u| self.neighbors(u)).collect();
        for start in 0..self.n {
            if color[start].is_some() || adj[start].is_empty() {
                continue;
            }
            color[start] = Some(false);
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                let cu = color[u].unwrap();
                for &v in &adj[u] {
                    match color[v] {
                        None => {
                            color[v] = Some(!cu);
                            stack.push(v);
                        }
                        Some(cv) if cv == cu => return Err(Error::NotBipartite),
                        _ => {}
                    }
                }
            }
        }
        let left = (0..self.n).filter(|&u| color[u] == Some(false)).collect();
        let right = (0..self.n).filter(|&u| color[u] == Some(true)).collect();
        Ok((left, right))
    }
}

/// One concrete graph drawn from the distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizedGraph {
    n: usize,
    edges: BTreeSet<Pair>,
}

impl RealizedGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = Pair>) -> Self {
        RealizedGraph {
            n,
            edges: edges.into_iter().collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = Pair> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, pair: Pair) -> bool {
        self.edges.contains(&pair)
    }
}

/// A set of vertex-disjoint pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    pairs: BTreeSet<Pair>,
}

impl Matching {
    pub fn new() -> Self {
        Matching::default()
    }

    /// Inserts a pair; panics if it shares a vertex with an existing pair.
    pub fn insert(&mut self, pair: Pair) {
        assert!(
            !self.covers(pair.lo()) && !self.covers(pair.hi()),
            "pair {pair} overlaps the matching"
        );
        self.pairs.insert(pair);
    }

    pub fn covers(&self, w: usize) -> bool {
        self.pairs.iter().any(|pair| pair.touches(w))
    }

    pub fn contains(&self, pair: Pair) -> bool {
        self.pairs.contains(&pair)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        self.pairs.iter().copied()
    }
}

impl FromIterator<Pair> for Matching {
    fn from_iter<I: IntoIterator<Item = Pair>>(iter: I) -> Self {
        let mut m = Matching::new();
        for pair in iter {
            m.insert(pair);
        }
        m
    }
}

/// Hides one realized graph and enforces commitment semantics: a probe
/// that finds an edge irrevocably matches it and removes both endpoints.
///
/// This is the only channel through which an online algorithm may learn
/// anything about the realization. Contract violations (re-probing a pair,
/// touching a removed vertex, probing a zero-probability pair) are hard
/// errors so that algorithm bugs surface instead of skewing results.
#[derive(Debug, Clone)]
pub struct ProbeOracle {
    realization: RealizedGraph,
    probeable: BTreeSet<Pair>,
    matched: Matching,
    probed_absent: BTreeSet<Pair>,
    removed: BTreeSet<usize>,
    log: Vec<(Pair, bool)>,
}

impl ProbeOracle {
    /// Wraps a realization drawn from `g`. Only pairs with `p_uv > 0` in
    /// `g` may ever be probed.
    pub fn new(g: &ProbGraph, realization: RealizedGraph) -> Self {
        debug_assert!(realization
            .edges()
            .all(|pair| g.p_pair(pair) > 0.0));
        ProbeOracle {
            realization,
            probeable: g.positive_pairs().map(|(pair, _)| pair).collect(),
            matched: Matching::new(),
            probed_absent: BTreeSet::new(),
            removed: BTreeSet::new(),
            log: Vec::new(),
        }
    }

    /// Probes a pair. Returns whether the edge is present; a present edge
    /// is committed to the matching and both endpoints are removed.
    pub fn probe(&mut self, a: usize, b: usize) -> Result<bool> {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        let pair = Pair::new(a, b);
        if !self.probeable.contains(&pair) {
            return Err(Error::PairNotProbeable(pair));
        }
        for w in [a, b] {
            if self.removed.contains(&w) {
                return Err(Error::VertexRemoved(w));
            }
        }
        if self.probed_absent.contains(&pair) || self.matched.contains(pair) {
            return Err(Error::PairAlreadyProbed(pair));
        }
        let present = self.realization.has_edge(pair);
        if present {
            self.matched.insert(pair);
            self.removed.insert(pair.lo());
            self.removed.insert(pair.hi());
        } else {
            self.probed_absent.insert(pair);
        }
        self.log.push((pair, present));
        Ok(present)
    }

    pub fn matched(&self) -> &Matching {
        &self.matched
    }

    pub fn is_removed(&self, w: usize) -> bool {
        self.removed.contains(&w)
    }

    pub fn was_probed(&self, pair: Pair) -> bool {
        self.probed_absent.contains(&pair) || self.matched.contains(pair)
    }

    /// Probe history in order: (pair, present).
    pub fn log(&self) -> &[(Pair, bool)] {
        &self.log
    }

    pub fn num_probes(&self) -> usize {
        self.log.len()
    }
}

/// Candidate pairs and alive vertices at the oracle's current state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateState {
    pub alive: BTreeSet<usize>,
    pub candidates: BTreeSet<Pair>,
}

/// Pairs with positive probability, both endpoints unmatched, and not yet
/// probed; a vertex is alive iff some candidate touches it.
pub fn candidate_state(g: &ProbGraph, oracle: &ProbeOracle) -> CandidateState {
    let mut candidates = BTreeSet::new();
    let mut alive = BTreeSet::new();
    for (pair, _) in g.positive_pairs() {
        if oracle.is_removed(pair.lo()) || oracle.is_removed(pair.hi()) {
            continue;
        }
        if oracle.was_probed(pair) {
            continue;
        }
        candidates.insert(pair);
        alive.insert(pair.lo());
        alive.insert(pair.hi());
    }
    CandidateState { alive, candidates }
}

/// Built-in instance generators.
#[derive(Debug, Clone)]
pub enum InstanceKind {
    /// Complete graph on `n` vertices, every pair with the same probability.
    UniformComplete { n: usize, p: f64 },
    /// Each pair kept with probability `density`; kept pairs get a
    /// probability drawn uniformly from `[0.05, 0.95]`.
    SparseRandom { n: usize, density: f64 },
    /// Complete bipartite graph with uniform edge probability.
    Bipartite { left: usize, right: usize, p: f64 },
    /// Path `0-1-...-k` with the given per-edge probabilities.
    Path { probs: Vec<f64> },
}

pub fn generate_instance<R: Rng>(kind: &InstanceKind, rng: &mut R) -> Result<ProbGraph> {
    match kind {
        InstanceKind::UniformComplete { n, p } => {
            let mut g = ProbGraph::new(*n);
            for u in 0..*n {
                for v in (u + 1)..*n {
                    g.set_p(u, v, *p)?;
                }
            }
            Ok(g)
        }
        InstanceKind::SparseRandom { n, density } => {
            if !(0.0..=1.0).contains(density) {
                return Err(Error::InvalidParams(format!("density {density} outside [0,1]")));
            }
            let mut g = ProbGraph::new(*n);
            for u in 0..*n {
                for v in (u + 1)..*n {
                    if rng.gen::<f64>() < *density {
                        let p = 0.05 + 0.90 * rng.gen::<f64>();
                        g.set_p(u, v, p)?;
                    }
                }
            }
            Ok(g)
        }
        InstanceKind::Bipartite { left, right, p } => {
            let mut g = ProbGraph::new(left + right);
            for u in 0..*left {
                for v in 0..*right {
                    g.set_p(u, left + v, *p)?;
                }
            }
            Ok(g)
        }
        InstanceKind::Path { probs } => {
            let mut g = ProbGraph::new(probs.len() + 1);
            for (i, &p) in probs.iter().enumerate() {
                g.set_p(i, i + 1, p)?;
            }
            Ok(g)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceEdge {
    u: usize,
    v: usize,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    edges: Vec<InstanceEdge>,
}

impl ProbGraph {
    /// Parses the JSON instance format
    /// `{"n": <int>, "edges": [{"u", "v", "p"}...]}`. Requires `u < v` and
    /// rejects duplicate pairs.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        let mut g = ProbGraph::new(file.n);
        let mut seen = BTreeSet::new();
        for e in &file.edges {
            if e.u == e.v {
                return Err(Error::SelfLoop(e.u));
            }
            if e.u >= e.v {
                return Err(Error::UnorderedPair(Pair::new(e.u, e.v)));
            }
            let pair = Pair::new(e.u, e.v);
            if !seen.insert(pair) {
                return Err(Error::DuplicatePair(pair));
            }
            g.set_p(e.u, e.v, e.p)?;
        }
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            n: self.n,
            edges: self
                .positive_pairs()
                .map(|(pair, p)| InstanceEdge {
                    u: pair.lo(),
                    v: pair.hi(),
                    p,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("instance serialization")
    }

    pub fn load(path: &Path) -> Result<Self> {
        ProbGraph::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
