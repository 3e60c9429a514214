//! Exact enumeration oracles for small instances: the per-pair canonical
//! maximum-matching membership probabilities `q*`, the expected optimal
//! matching size, and a cross-trial cache of residual-graph tables.

use crate::graph::{Matching, Pair, ProbGraph, RealizedGraph};
use crate::matching::{brute_force_max_matching, max_matching};
use crate::{Error, Result};
use rand::Rng;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

/// Positive-pair limit for `2^m` enumeration (about one second of work).
pub const EXACT_PAIR_LIMIT: usize = 20;

/// Exact `q*` values: for each positive pair, the probability that it
/// belongs to the canonical maximum matching of a random realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactQTable {
    pub q_star: BTreeMap<Pair, f64>,
    /// Sum over unordered pairs; equals the expected optimum size.
    pub total: f64,
}

impl ExactQTable {
    pub fn q(&self, pair: Pair) -> f64 {
        self.q_star.get(&pair).copied().unwrap_or(0.0)
    }

    /// `Q_u`: probability vertex `u` is matched offline.
    pub fn q_vertex(&self, u: usize) -> f64 {
        self.q_star
            .iter()
            .filter(|(pair, _)| pair.touches(u))
            .map(|(_, q)| q)
            .sum()
    }
}

fn check_pair_limit(m: usize) -> Result<()> {
    if m > EXACT_PAIR_LIMIT {
        return Err(Error::InstanceTooLarge {
            actual: m,
            limit: EXACT_PAIR_LIMIT,
            unit: "positive pairs",
        });
    }
    Ok(())
}

/// Enumerates all `2^m` realizations of `g`, weighting each by its
/// probability, and accumulates membership of each pair in the canonical
/// (lexicographically smallest) maximum matching.
pub fn exact_q_table(g: &ProbGraph) -> Result<ExactQTable> {
    let pairs: Vec<(Pair, f64)> = g.positive_pairs().collect();
    check_pair_limit(pairs.len())?;
    let m = pairs.len();
    let mut q = vec![0.0f64; m];
    for mask in 0u32..(1u32 << m) {
        let mut prob = 1.0;
        let mut edges = Vec::new();
        for (i, &(pair, p)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                prob *= p;
                edges.push(pair);
            } else {
                prob *= 1.0 - p;
            }
        }
        if prob == 0.0 {
            continue;
        }
        let matching = brute_force_max_matching(&RealizedGraph::new(g.n(), edges))?;
        for (i, &(pair, _)) in pairs.iter().enumerate() {
            if matching.contains(pair) {
                q[i] += prob;
            }
        }
    }
    let q_star: BTreeMap<Pair, f64> = pairs
        .iter()
        .enumerate()
        .map(|(i, &(pair, _))| (pair, q[i]))
        .collect();
    let total = q_star.values().sum();
    Ok(ExactQTable { q_star, total })
}

/// How the expected optimum is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptMode {
    Exact,
    MonteCarlo { trials: usize },
}

/// Expected maximum-matching size, with the half-width of a 95% normal
/// confidence interval (zero in exact mode).
pub fn expected_opt<R: Rng>(g: &ProbGraph, mode: OptMode, rng: &mut R) -> Result<(f64, f64)> {
    match mode {
        OptMode::Exact => {
            let pairs: Vec<(Pair, f64)> = g.positive_pairs().collect();
            check_pair_limit(pairs.len())?;
            let m = pairs.len();
            let mut expectation = 0.0;
            for mask in 0u32..(1u32 << m) {
                let mut prob = 1.0;
                let mut edges = Vec::new();
                for (i, &(pair, p)) in pairs.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        prob *= p;
                        edges.push(pair);
                    } else {
                        prob *= 1.0 - p;
                    }
                }
                if prob == 0.0 {
                    continue;
                }
                expectation += prob * max_matching(&RealizedGraph::new(g.n(), edges)).len() as f64;
            }
            Ok((expectation, 0.0))
        }
        OptMode::MonteCarlo { trials } => {
            if trials < 2 {
                return Err(Error::TooFewTrials(trials));
            }
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..trials {
                let size = max_matching(&g.sample_realization(rng)).len() as f64;
                sum += size;
                sum_sq += size * size;
            }
            let n = trials as f64;
            let mean = sum / n;
            let var = (sum_sq - n * mean * mean).max(0.0) / (n - 1.0);
            Ok((mean, 1.96 * (var / n).sqrt()))
        }
    }
}

/// Cache of exact `q*` tables for residual subgraphs of one base instance.
///
/// Stage 1 re-estimates `q` on the residual graph after every few probes;
/// across many trials of the same instance the residuals repeat, and every
/// residual is a subset of the base positive pairs, so a pair bitmask
/// identifies it. A shared canonical-matching memo (keyed by realized edge
/// mask) serves all table builds.
pub struct ExactQCache {
    pairs: Vec<(Pair, f64)>,
    index: HashMap<Pair, usize>,
    n: usize,
    tables: HashMap<u32, Rc<ExactQTable>>,
    matchings: HashMap<u32, Rc<Matching>>,
}

impl ExactQCache {
    pub fn new(g: &ProbGraph) -> Result<Self> {
        let pairs: Vec<(Pair, f64)> = g.positive_pairs().collect();
        check_pair_limit(pairs.len())?;
        let index = pairs
            .iter()
            .enumerate()
            .map(|(i, &(pair, _))| (pair, i))
            .collect();
        Ok(ExactQCache {
            pairs,
            index,
            n: g.n(),
            tables: HashMap::new(),
            matchings: HashMap::new(),
        })
    }

    /// Bitmask of `residual`'s positive pairs within the base pair list,
    /// or None if `residual` is not a sub-instance of the base.
    pub fn mask_of(&self, residual: &ProbGraph) -> Option<u32> {
        let mut mask = 0u32;
        for (pair, p) in residual.positive_pairs() {
            let &i = self.index.get(&pair)?;
            if self.pairs[i].1 != p {
                return None;
            }
            mask |= 1 << i;
        }
        Some(mask)
    }

    fn canonical_matching(&mut self, edge_mask: u32) -> Rc<Matching> {
        if let Some(m) = self.matchings.get(&edge_mask) {
            return Rc::clone(m);
        }
        let edges: Vec<Pair> = self
            .pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| edge_mask >> i & 1 == 1)
            .map(|(_, &(pair, _))| pair)
            .collect();
        let matching = Rc::new(
            brute_force_max_matching(&RealizedGraph::new(self.n, edges))
                .expect("within brute-force limit"),
        );
        self.matchings.insert(edge_mask, Rc::clone(&matching));
        matching
    }

    /// Exact table for the residual selected by `residual_mask`.
    pub fn table(&mut self, residual_mask: u32) -> Rc<ExactQTable> {
        if let Some(t) = self.tables.get(&residual_mask) {
            return Rc::clone(t);
        }
        let live: Vec<usize> = (0..self.pairs.len())
            .filter(|i| residual_mask >> i & 1 == 1)
            .collect();
        let m = live.len();
        let mut q = vec![0.0f64; m];
        for sub in 0u32..(1u32 << m) {
            let mut prob = 1.0;
            let mut edge_mask = 0u32;
            for (j, &i) in live.iter().enumerate() {
                if sub >> j & 1 == 1 {
                    prob *= self.pairs[i].1;
                    edge_mask |= 1 << i;
                } else {
                    prob *= 1.0 - self.pairs[i].1;
                }
            }
            if prob == 0.0 {
                continue;
            }
            let matching = self.canonical_matching(edge_mask);
            for (j, &i) in live.iter().enumerate() {
                if matching.contains(self.pairs[i].0) {
                    q[j] += prob;
                }
            }
        }
        let q_star: BTreeMap<Pair, f64> = live
            .iter()
            .enumerate()
            .map(|(j, &i)| (self.pairs[i].0, q[j]))
            .collect();
        let total = q_star.values().sum();
        let table = Rc::new(ExactQTable { q_star, total });
        self.tables.insert(residual_mask, Rc::clone(&table));
        table
    }
}
