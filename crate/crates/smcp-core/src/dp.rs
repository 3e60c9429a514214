//! Exact optimal-online value by stochastic dynamic programming.
//!
//! A state is (set of alive vertices, set of pairs probed absent); the
//! optimal policy probes the candidate pair maximizing
//! `p (1 + V_match) + (1-p) V_absent`. Stopping early is never better
//! because every continuation value is non-negative, which the tests
//! confirm against a variant with an explicit stop action.

use crate::graph::{Pair, ProbGraph};
use crate::{Error, Result};
use std::collections::HashMap;

/// State-space guard: at most `2^(n + m)` states are touched.
pub const DP_PAIR_LIMIT: usize = 12;

struct Dp {
    pairs: Vec<(Pair, f64)>,
    memo: HashMap<(u32, u16), f64>,
    allow_stop: bool,
}

impl Dp {
    fn value(&mut self, alive: u32, absent: u16) -> f64 {
        // Canonical key: absent bits of pairs with a dead endpoint carry
        // no information.
        let mut key_absent = 0u16;
        for (i, &(e, _)) in self.pairs.iter().enumerate() {
            if absent >> i & 1 == 1 && alive >> e.lo() & 1 == 1 && alive >> e.hi() & 1 == 1 {
                key_absent |= 1 << i;
            }
        }
        if let Some(&v) = self.memo.get(&(alive, key_absent)) {
            return v;
        }
        let mut best = if self.allow_stop { Some(0.0f64) } else { None };
        let pairs = self.pairs.clone();
        for (i, &(e, p)) in pairs.iter().enumerate() {
            if key_absent >> i & 1 == 1
                || alive >> e.lo() & 1 == 0
                || alive >> e.hi() & 1 == 0
            {
                continue;
            }
            let matched = alive & !(1 << e.lo()) & !(1 << e.hi());
            let v = p * (1.0 + self.value(matched, key_absent))
                + (1.0 - p) * self.value(alive, key_absent | (1 << i));
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
        let v = best.unwrap_or(0.0);
        self.memo.insert((alive, key_absent), v);
        v
    }
}

fn optimal_value(g: &ProbGraph, allow_stop: bool) -> Result<f64> {
    let pairs: Vec<(Pair, f64)> = g.positive_pairs().collect();
    if pairs.len() > DP_PAIR_LIMIT {
        return Err(Error::InstanceTooLarge {
            actual: pairs.len(),
            limit: DP_PAIR_LIMIT,
            unit: "pairs",
        });
    }
    if g.n() > 32 {
        return Err(Error::InstanceTooLarge {
            actual: g.n(),
            limit: 32,
            unit: "vertices",
        });
    }
    let alive = if g.n() == 32 {
        u32::MAX
    } else {
        (1u32 << g.n()) - 1
    };
    let mut dp = Dp {
        pairs,
        memo: HashMap::new(),
        allow_stop,
    };
    Ok(dp.value(alive, 0))
}

/// Expected matching size of the best possible probing policy.
pub fn optimal_online_value(g: &ProbGraph) -> Result<f64> {
    optimal_value(g, false)
}

/// Same program with an explicit stop action (test aid; always equal).
pub fn optimal_online_value_with_stop(g: &ProbGraph) -> Result<f64> {
    optimal_value(g, true)
}

/// Closed forms for `K_4` with uniform edge probability `p`:
/// (optimal online value, expected maximum matching).
pub fn k4_closed_forms(p: f64) -> (f64, f64) {
    let q = 1.0 - p;
    let online = p + p * p
        + q * p * (1.0 + p)
        + q * q * p * (1.0 + p)
        + q * q * q * (1.0 - q * q * q);
    // Max matching size 1: exactly one perfect pair present with both
    // complements absent is impossible at size 1; enumerate by edge count.
    // P(max = 1) = P(some edge, no two disjoint edges present).
    let one = 8.0 * p.powi(3) * q.powi(3) + 6.0 * p * q.powi(5) + 12.0 * p * p * q.powi(4);
    let any = 1.0 - q.powi(6);
    let offline = one + 2.0 * (any - one);
    (online, offline)
}

/// Online-to-offline ratio for `K_4(p)` from the closed forms.
pub fn hardness_ratio(p: f64) -> f64 {
    let (online, offline) = k4_closed_forms(p);
    online / offline
}
