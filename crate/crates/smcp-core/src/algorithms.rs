//! Online probing algorithms.
//!
//! The two-stage algorithm first prunes pairs whose membership-to-presence
//! ratio `q/p` is at least `alpha` by probing them outright, then runs
//! repeated random bipartitions where each left vertex probes its right
//! neighbors in an order drawn from the constrained sampler. Baselines:
//! greedy in a fixed or random pair order, random vertex-local greedy, and
//! an oblivious two-sided permutation algorithm for bipartite instances.

use crate::estimator::{default_sample_count, estimate_q, recompute_schedule, Matcher, SampleCount};
use crate::graph::{Pair, ProbGraph, ProbeOracle};
use crate::qtable::{exact_q_table, ExactQCache};
use crate::sampler::{build_policy, delta_scaled_targets, sample_order};
use crate::{Matching, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};

/// How the two-stage algorithm obtains its `q` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QMode {
    /// Monte Carlo with the analysis sample budget `ceil(n (ln n)^6)`.
    Paper,
    /// Monte Carlo with the practical budget `max(1000, ceil(n (ln n)^2))`.
    Fast,
    /// Exact membership probabilities by enumeration (small instances).
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStageConfig {
    /// Pruning threshold on `q/p`.
    pub alpha: f64,
    pub q_mode: QMode,
    /// Recompute batching fraction: up to `max(1, floor(Lambda zeta))`
    /// probes between re-estimations.
    pub zeta: f64,
}

impl Default for TwoStageConfig {
    fn default() -> Self {
        TwoStageConfig {
            alpha: 0.255,
            q_mode: QMode::Fast,
            zeta: 0.05,
        }
    }
}

/// Per-iteration guarantee factor of the bipartition stage:
/// `phi = (1 - 1/e)(1 - e^{-1/2 alpha})`.
pub fn phi(alpha: f64) -> f64 {
    (1.0 - (-1.0f64).exp()) * (1.0 - (-1.0 / (2.0 * alpha)).exp())
}

/// Trace of one algorithm run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub matching: Matching,
    /// Probe history in order: (pair, present).
    pub probes: Vec<(Pair, bool)>,
    pub stage1_matches: usize,
    pub stage2_matches: usize,
    /// Stage-1 probes with the estimates they were justified by:
    /// (pair, p, estimated q).
    pub stage1_snapshots: Vec<(Pair, f64, f64)>,
    /// Matches per Stage-2 iteration.
    pub stage2_iteration_matches: Vec<usize>,
    /// The frozen estimate Stage 2 ran with.
    pub frozen_q: BTreeMap<Pair, f64>,
    /// (L, R) of the first Stage-2 bipartition, if Stage 2 ran.
    pub first_bipartition: Option<(Vec<usize>, Vec<usize>)>,
}

impl RunRecord {
    pub fn matched(&self) -> usize {
        self.matching.len()
    }
}

fn finish(oracle: &ProbeOracle, rec: RunRecord) -> RunRecord {
    debug_assert_eq!(rec.stage1_matches + rec.stage2_matches, rec.matching.len());
    debug_assert_eq!(oracle.matched().len(), rec.matching.len());
    rec
}

/// Runs the two-stage algorithm, computing exact `q` tables from scratch
/// when `cfg.q_mode` is [`QMode::Exact`].
pub fn run_two_stage<R: Rng>(
    g: &ProbGraph,
    oracle: &mut ProbeOracle,
    cfg: &TwoStageConfig,
    rng: &mut R,
) -> Result<RunRecord> {
    two_stage_inner(g, oracle, cfg, None, rng)
}

/// Runs the two-stage algorithm in exact-q mode against a shared table
/// cache; cuts repeated enumeration across many trials of one instance.
pub fn run_two_stage_with_cache<R: Rng>(
    g: &ProbGraph,
    oracle: &mut ProbeOracle,
    cfg: &TwoStageConfig,
    cache: &mut ExactQCache,
    rng: &mut R,
) -> Result<RunRecord> {
    two_stage_inner(g, oracle, cfg, Some(cache), rng)
}

fn q_values<R: Rng>(
    residual: &ProbGraph,
    cfg: &TwoStageConfig,
    cache: &mut Option<&mut ExactQCache>,
    rng: &mut R,
) -> Result<BTreeMap<Pair, f64>> {
    match cfg.q_mode {
        QMode::Exact => {
            if let Some(cache) = cache.as_deref_mut() {
                let mask = cache
                    .mask_of(residual)
                    .expect("residual is a sub-instance of the cached base");
                let table = cache.table(mask);
                Ok(residual
                    .positive_pairs()
                    .map(|(e, _)| (e, table.q(e)))
                    .collect())
            } else {
                let table = exact_q_table(residual)?;
                Ok(residual
                    .positive_pairs()
                    .map(|(e, _)| (e, table.q(e)))
                    .collect())
            }
        }
        QMode::Paper | QMode::Fast => {
            let count = match cfg.q_mode {
                QMode::Paper => SampleCount::Analysis,
                _ => SampleCount::Fast,
            };
            let samples = default_sample_count(residual.n(), count);
            Ok(estimate_q(residual, samples, Matcher::Maximum, rng)?.q)
        }
    }
}

fn two_stage_inner<R: Rng>(
    g: &ProbGraph,
    oracle: &mut ProbeOracle,
    cfg: &TwoStageConfig,
    mut cache: Option<&mut ExactQCache>,
    rng: &mut R,
) -> Result<RunRecord> {
    let mut rec = RunRecord {
        matching: Matching::new(),
        probes: Vec::new(),
        stage1_matches: 0,
        stage2_matches: 0,
        stage1_snapshots: Vec::new(),
        stage2_iteration_matches: Vec::new(),
        frozen_q: BTreeMap::new(),
        first_bipartition: None,
    };
    let mut residual = g.clone();

    // Stage 1: estimate and prune.
    let frozen_q = loop {
        let q = q_values(&residual, cfg, &mut cache, rng)?;
        let sum_q: f64 = q.values().sum();
        let budget = recompute_schedule(sum_q, cfg.zeta);
        let mut below_threshold = false;
        for _ in 0..budget {
            // Maximum finite ratio q/p; BTreeMap order breaks ties by
            // lexicographically smallest pair.
            let best = residual
                .positive_pairs()
                .map(|(e, p)| (e, p, q.get(&e).copied().unwrap_or(0.0) / p))
                .fold(None::<(Pair, f64, f64)>, |acc, cur| match acc {
                    Some(best) if best.2 >= cur.2 => Some(best),
                    _ => Some(cur),
                });
            let Some((e, p, ratio)) = best else {
                below_threshold = true;
                break;
            };
            if ratio < cfg.alpha {
                below_threshold = true;
                break;
            }
            rec.stage1_snapshots.push((e, p, ratio * p));
            let present = oracle.probe(e.lo(), e.hi())?;
            rec.probes.push((e, present));
            if present {
                rec.matching.insert(e);
                rec.stage1_matches += 1;
                residual.remove_vertex(e.lo());
                residual.remove_vertex(e.hi());
            } else {
                residual.zero_pair(e);
            }
        }
        if below_threshold {
            // The estimate under which the threshold test failed stays
            // frozen for the rest of the run.
            break q;
        }
    };
    rec.frozen_q = frozen_q;

    // Stage 2: random bipartition, sample and match.
    let mut x: Vec<usize> = alive_vertices(&residual).into_iter().collect();
    while x.len() >= 2 && has_internal_pair(&residual, &x) {
        x.sort_unstable();
        x.shuffle(rng);
        let left_size = x.len().div_ceil(2);
        let left: Vec<usize> = x[..left_size].to_vec();
        let right: BTreeSet<usize> = x[left_size..].iter().copied().collect();
        if rec.first_bipartition.is_none() {
            let mut l_sorted = left.clone();
            l_sorted.sort_unstable();
            rec.first_bipartition = Some((l_sorted, right.iter().copied().collect()));
        }

        let mut iter_matches = 0;
        let mut left_sorted = left.clone();
        left_sorted.sort_unstable();
        for &u in &left_sorted {
            // Alive candidate neighbors of u across the bipartition.
            let nbrs: Vec<(Pair, f64)> = residual
                .positive_pairs()
                .filter(|(e, _)| e.touches(u) && right.contains(&e.other(u)))
                .collect();
            if nbrs.is_empty() {
                continue;
            }
            let p: Vec<f64> = nbrs.iter().map(|&(_, p)| p).collect();
            let q: Vec<f64> = nbrs
                .iter()
                .map(|(e, _)| rec.frozen_q.get(e).copied().unwrap_or(0.0))
                .collect();
            let profile = delta_scaled_targets(&q, &p, cfg.alpha)?;
            let policy = build_policy(&profile)?;
            for idx in sample_order(&policy, rng) {
                let e = nbrs[idx].0;
                let present = oracle.probe(e.lo(), e.hi())?;
                rec.probes.push((e, present));
                if present {
                    rec.matching.insert(e);
                    rec.stage2_matches += 1;
                    iter_matches += 1;
                    residual.remove_vertex(e.lo());
                    residual.remove_vertex(e.hi());
                    break;
                }
                residual.zero_pair(e);
            }
        }
        rec.stage2_iteration_matches.push(iter_matches);

        // Discard all of L, matched or not; recurse on R's alive part.
        for &u in &left {
            residual.remove_vertex(u);
        }
        let alive = alive_vertices(&residual);
        x = right.into_iter().filter(|v| alive.contains(v)).collect();
    }
    Ok(finish(oracle, rec))
}

fn alive_vertices(residual: &ProbGraph) -> BTreeSet<usize> {
    let mut alive = BTreeSet::new();
    for (e, _) in residual.positive_pairs() {
        alive.insert(e.lo());
        alive.insert(e.hi());
    }
    alive
}

fn has_internal_pair(residual: &ProbGraph, x: &[usize]) -> bool {
    let set: BTreeSet<usize> = x.iter().copied().collect();
    residual
        .positive_pairs()
        .any(|(e, _)| set.contains(&e.lo()) && set.contains(&e.hi()))
}

/// Probe order of the greedy baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyOrder {
    /// Ascending pair order.
    Index,
    /// A uniformly random permutation of the candidate pairs.
    Random,
}

/// Greedy baseline: probes every candidate pair in the given order,
/// skipping pairs with a removed endpoint. The result is maximal on the
/// positive-probability support of the realization.
pub fn run_greedy<R: Rng>(
    g: &ProbGraph,
    oracle: &mut ProbeOracle,
    order: GreedyOrder,
    rng: &mut R,
) -> Result<RunRecord> {
    let mut pairs: Vec<Pair> = g.positive_pairs().map(|(e, _)| e).collect();
    if order == GreedyOrder::Random {
        pairs.shuffle(rng);
    }
    let mut rec = baseline_record();
    for e in pairs {
        if oracle.is_removed(e.lo()) || oracle.is_removed(e.hi()) {
            continue;
        }
        let present = oracle.probe(e.lo(), e.hi())?;
        rec.probes.push((e, present));
        if present {
            rec.matching.insert(e);
            rec.stage1_matches += 1;
        }
    }
    Ok(finish(oracle, rec))
}

/// Vertex-local greedy baseline: visits vertices in uniformly random
/// order; each still-alive vertex probes its alive candidate neighbors in
/// uniformly random order until matched or exhausted.
pub fn run_random_vertex_greedy<R: Rng>(
    g: &ProbGraph,
    oracle: &mut ProbeOracle,
    rng: &mut R,
) -> Result<RunRecord> {
    let mut vertices: Vec<usize> = (0..g.n()).collect();
    vertices.shuffle(rng);
    let mut rec = baseline_record();
    for u in vertices {
        if oracle.is_removed(u) {
            continue;
        }
        let mut nbrs: Vec<Pair> = g
            .positive_pairs()
            .filter(|(e, _)| e.touches(u))
            .map(|(e, _)| e)
            .collect();
        nbrs.shuffle(rng);
        for e in nbrs {
            if oracle.is_removed(e.other(u)) || oracle.was_probed(e) {
                continue;
            }
            let present = oracle.probe(e.lo(), e.hi())?;
            rec.probes.push((e, present));
            if present {
                rec.matching.insert(e);
                rec.stage1_matches += 1;
                break;
            }
        }
    }
    Ok(finish(oracle, rec))
}

/// Oblivious bipartite baseline: permutes both sides uniformly; each left
/// vertex in permutation order probes its right candidates in permutation
/// order until matched or exhausted. Errors on non-bipartite support.
pub fn run_oblivious_bipartite<R: Rng>(
    g: &ProbGraph,
    oracle: &mut ProbeOracle,
    rng: &mut R,
) -> Result<RunRecord> {
    let (mut left, mut right) = g.bipartition()?;
    left.shuffle(rng);
    right.shuffle(rng);
    let rank: BTreeMap<usize, usize> = right.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut rec = baseline_record();
    for &u in &left {
        if oracle.is_removed(u) {
            continue;
        }
        let mut nbrs: Vec<(usize, Pair)> = g
            .positive_pairs()
            .filter(|(e, _)| e.touches(u) && rank.contains_key(&e.other(u)))
            .map(|(e, _)| (rank[&e.other(u)], e))
            .collect();
        nbrs.sort_unstable();
        for (_, e) in nbrs {
            if oracle.is_removed(e.other(u)) || oracle.was_probed(e) {
                continue;
            }
            let present = oracle.probe(e.lo(), e.hi())?;
            rec.probes.push((e, present));
            if present {
                rec.matching.insert(e);
                rec.stage1_matches += 1;
                break;
            }
        }
    }
    Ok(finish(oracle, rec))
}

fn baseline_record() -> RunRecord {
    RunRecord {
        matching: Matching::new(),
        probes: Vec::new(),
        stage1_matches: 0,
        stage2_matches: 0,
        stage1_snapshots: Vec::new(),
        stage2_iteration_matches: Vec::new(),
        frozen_q: BTreeMap::new(),
        first_bipartition: None,
    }
}
