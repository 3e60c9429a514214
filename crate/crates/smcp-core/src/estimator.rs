//! Monte Carlo estimation of matching-membership probabilities.
//!
//! For a vertex `u`, `q_{uv}` is the probability that the pair `(u,v)`
//! belongs to the canonical maximum matching of a random realization.
//! The estimator samples realizations, computes the canonical matching of
//! each, and averages indicator variables. Estimates for all pairs at one
//! vertex come from the same samples, so `sum_v q_{uv} <= 1` holds exactly
//! for the empirical values as well.

use crate::graph::{Pair, ProbGraph, RealizedGraph};
use crate::matching::{canonical_max_matching, greedy_maximal_matching, BRUTE_FORCE_EDGE_LIMIT};
use crate::{Error, Result};
use rand::Rng;
use std::collections::BTreeMap;
use std::collections::HashMap;

/// Which matching the per-realization indicator refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matcher {
    /// Canonical maximum matching.
    Maximum,
    /// Greedy maximal matching in ascending pair order (cheaper, smaller
    /// and biased; useful as a fast sanity baseline only).
    GreedyMaximal,
}

/// How many realizations to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleCount {
    /// `ceil(n (ln n)^6)` samples; the concentration analysis budget.
    Analysis,
    /// `max(1000, ceil(n (ln n)^2))` samples; accurate enough in practice.
    Fast,
    Exactly(usize),
}

/// Empirical membership probabilities for the pairs of a graph.
#[derive(Debug, Clone)]
pub struct QEstimate {
    pub q: BTreeMap<Pair, f64>,
    pub samples_used: usize,
    pub matcher: Matcher,
}

impl QEstimate {
    pub fn q(&self, pair: Pair) -> f64 {
        self.q.get(&pair).copied().unwrap_or(0.0)
    }

    /// `Q_u = sum_v q_{uv}`.
    pub fn q_vertex(&self, u: usize) -> f64 {
        self.q
            .iter()
            .filter(|(pair, _)| pair.touches(u))
            .map(|(_, &x)| x)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.q.values().sum()
    }
}

/// Resolves a [`SampleCount`] for an `n`-vertex graph.
pub fn default_sample_count(n: usize, mode: SampleCount) -> usize {
    let n_eff = n.max(2) as f64;
    let ln = n_eff.ln();
    match mode {
        SampleCount::Analysis => (n_eff * ln.powi(6)).ceil() as usize,
        SampleCount::Fast => 1000usize.max((n_eff * ln.powi(2)).ceil() as usize),
        SampleCount::Exactly(c) => c.max(1),
    }
}

/// How many probes the two-stage algorithm performs between successive
/// re-estimations: `max(1, floor(Lambda * zeta))` where `Lambda` is the
/// floor of the expected optimum (approximated by `sum q`).
pub fn recompute_schedule(sum_q: f64, zeta: f64) -> usize {
    let lambda = sum_q.max(0.0).floor();
    ((lambda * zeta).floor() as usize).max(1)
}

/// Additive error bound for `c` samples at confidence `1 - eta`
/// (Hoeffding): `sqrt(ln(2/eta) / (2c))`.
pub fn estimation_error(samples: usize, eta: f64) -> f64 {
    ((2.0 / eta).ln() / (2.0 * samples as f64)).sqrt()
}

/// Estimates `q` for every positive-probability pair of `g` from `samples`
/// random realizations.
///
/// With at most [`BRUTE_FORCE_EDGE_LIMIT`] pairs, realizations repeat and
/// canonical matchings are memoized by edge bitmask.
pub fn estimate_q<R: Rng>(
    g: &ProbGraph,
    samples: usize,
    matcher: Matcher,
    rng: &mut R,
) -> Result<QEstimate> {
    if samples == 0 {
        return Err(Error::TooFewTrials(0));
    }
    let pairs: Vec<Pair> = g.positive_pairs().map(|(e, _)| e).collect();
    let mut counts: BTreeMap<Pair, usize> = pairs.iter().map(|&e| (e, 0)).collect();
    let small = pairs.len() <= BRUTE_FORCE_EDGE_LIMIT;
    let mut memo: HashMap<u64, Vec<Pair>> = HashMap::new();

    for _ in 0..samples {
        let mut mask = 0u64;
        let mut realized: Vec<Pair> = Vec::new();
        for (j, &e) in pairs.iter().enumerate() {
            if rng.gen::<f64>() < g.p_pair(e) {
                realized.push(e);
                if small {
                    mask |= 1 << j;
                }
            }
        }
        let matched: Vec<Pair> = if small {
            if let Some(m) = memo.get(&mask) {
                m.clone()
            } else {
                let m = matched_pairs(g.n(), &realized, matcher);
                memo.insert(mask, m.clone());
                m
            }
        } else {
            matched_pairs(g.n(), &realized, matcher)
        };
        for e in matched {
            *counts.get_mut(&e).expect("matched pair exists in graph") += 1;
        }
    }

    let q = counts
        .into_iter()
        .map(|(e, c)| (e, c as f64 / samples as f64))
        .collect();
    Ok(QEstimate {
        q,
        samples_used: samples,
        matcher,
    })
}

fn matched_pairs(n: usize, realized: &[Pair], matcher: Matcher) -> Vec<Pair> {
    let rg = RealizedGraph::new(n, realized.iter().copied());
    let m = match matcher {
        Matcher::Maximum => canonical_max_matching(&rg),
        Matcher::GreedyMaximal => greedy_maximal_matching(&rg),
    };
    m.pairs().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_instance, InstanceKind};
    use crate::qtable::exact_q_table;
    use crate::rng;

    fn k4(p: f64) -> ProbGraph {
        let mut g = ProbGraph::new(4);
        for u in 0..4 {
            for v in (u + 1)..4 {
                g.set_p(u, v, p).unwrap();
            }
        }
        g
    }

    #[test]
    fn sample_count_modes() {
        assert_eq!(default_sample_count(0, SampleCount::Fast), 1000);
        assert_eq!(default_sample_count(10, SampleCount::Exactly(7)), 7);
        assert_eq!(default_sample_count(10, SampleCount::Exactly(0)), 1);
        let n = 50f64;
        let analysis = default_sample_count(50, SampleCount::Analysis);
        assert_eq!(analysis, (n * n.ln().powi(6)).ceil() as usize);
        assert!(default_sample_count(50, SampleCount::Fast) >= 1000);
        // Analysis budget dominates the fast one.
        assert!(analysis > default_sample_count(50, SampleCount::Fast));
    }

    #[test]
    fn schedule_and_error_bounds() {
        assert_eq!(recompute_schedule(0.4, 0.05), 1);
        assert_eq!(recompute_schedule(25.0, 0.05), 1);
        assert_eq!(recompute_schedule(60.9, 0.05), 3);
        let err = estimation_error(10_000, 0.01);
        assert!((err - ((200.0f64).ln() / 20_000.0).sqrt()).abs() < 1e-12);
        assert!(estimation_error(40_000, 0.01) < err);
    }

    #[test]
    fn k4_estimates_match_exact_table() {
        let g = k4(0.64);
        let exact = exact_q_table(&g).unwrap();
        let samples = 100_000;
        let est = estimate_q(&g, samples, Matcher::Maximum, &mut rng::master(5)).unwrap();
        assert_eq!(est.samples_used, samples);
        let tol = 4.0 * estimation_error(samples, 0.01);
        for (&e, &q_hat) in &est.q {
            assert!(
                (q_hat - exact.q(e)).abs() <= tol,
                "{e}: {q_hat} vs {}",
                exact.q(e)
            );
        }
        assert!((est.total() - exact.total).abs() <= 6.0 * tol);
    }

    #[test]
    fn per_vertex_mass_is_a_probability() {
        let kind = InstanceKind::SparseRandom { n: 12, density: 0.5 };
        let g = generate_instance(&kind, &mut rng::master(9)).unwrap();
        let est = estimate_q(&g, 2000, Matcher::Maximum, &mut rng::master(10)).unwrap();
        for u in 0..12 {
            let qv = est.q_vertex(u);
            assert!((0.0..=1.0 + 1e-12).contains(&qv), "vertex {u}: {qv}");
        }
        for (&e, &q_hat) in &est.q {
            assert!(q_hat <= g.p_pair(e) + 1e-12, "{e}");
        }
    }

    #[test]
    fn membership_never_exceeds_presence() {
        // Estimated from the same stream: presence frequency of a pair is
        // an exact upper bound on its matching frequency.
        let g = k4(0.3);
        let samples = 20_000;
        let est = estimate_q(&g, samples, Matcher::Maximum, &mut rng::master(13)).unwrap();
        let mut presence: BTreeMap<Pair, usize> = BTreeMap::new();
        let mut r = rng::master(13);
        let pairs: Vec<Pair> = g.positive_pairs().map(|(e, _)| e).collect();
        for _ in 0..samples {
            for &e in &pairs {
                if r.gen::<f64>() < g.p_pair(e) {
                    *presence.entry(e).or_insert(0) += 1;
                }
            }
        }
        for (&e, &c) in &presence {
            assert!(est.q(e) <= c as f64 / samples as f64 + 1e-12, "{e}");
        }
    }

    #[test]
    fn estimates_converge_with_more_samples() {
        let g = k4(0.5);
        let exact = exact_q_table(&g).unwrap();
        let mut errs = Vec::new();
        for &c in &[500usize, 50_000] {
            let est = estimate_q(&g, c, Matcher::Maximum, &mut rng::master(17)).unwrap();
            let err: f64 = est
                .q
                .iter()
                .map(|(&e, &q)| (q - exact.q(e)).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[1] < errs[0]);
        assert!(errs[1] < 0.01);
    }

    #[test]
    fn greedy_matcher_undercounts_only_in_aggregate() {
        let g = k4(0.64);
        let est_max = estimate_q(&g, 30_000, Matcher::Maximum, &mut rng::master(19)).unwrap();
        let est_greedy = estimate_q(&g, 30_000, Matcher::GreedyMaximal, &mut rng::master(19)).unwrap();
        assert!(est_greedy.total() <= est_max.total() + 1e-9);
    }

    #[test]
    fn zero_samples_is_an_error() {
        let g = k4(0.5);
        assert!(matches!(
            estimate_q(&g, 0, Matcher::Maximum, &mut rng::master(0)),
            Err(Error::TooFewTrials(_))
        ));
    }
}
