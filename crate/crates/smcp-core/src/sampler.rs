//! Constrained sampling over probe orders.
//!
//! Given independent events with probabilities `p_i` and non-negative
//! targets `r_i`, builds a distribution over permutations such that each
//! event is the first to occur with probability at least `r_i`, whenever
//! the subset condition `sum_{i in S} r_i <= 1 - prod_{i in S} (1 - p_i)`
//! holds for every `S`. The construction is combinatorial: after a global
//! scaling that makes some prefix constraint tight, it alternates slack
//! removal (mixing in a fixed order) and divide-and-conquer splits at
//! tight prefixes. Policies support O(k) sampling and exact polynomial
//! evaluation of first-occurrence probabilities.

use crate::{Error, Result};
use rand::Rng;

/// Absolute slack tolerance for feasibility and tightness checks.
pub const SLACK_TOL: f64 = 1e-9;

/// Bisection tolerance for the slack-removal mixing weight.
const Z_TOL: f64 = 1e-12;

/// Feasibility tolerance inside the mixing bisection. Much tighter than
/// `SLACK_TOL`: any violation accepted here is later clamped off the
/// child's targets, and those shavings accumulate across tree levels.
const FEAS_TOL: f64 = 1e-12;

/// Event probabilities plus per-event first-occurrence targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetProfile {
    pub p: Vec<f64>,
    pub r: Vec<f64>,
}

impl TargetProfile {
    pub fn new(p: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        if p.len() != r.len() {
            return Err(Error::MalformedProfile(format!(
                "{} probabilities vs {} targets",
                p.len(),
                r.len()
            )));
        }
        for &x in &p {
            if !(0.0..=1.0).contains(&x) || x.is_nan() {
                return Err(Error::InvalidProbability(x));
            }
        }
        for &x in &r {
            if !(x >= 0.0) || x > 1.0 {
                return Err(Error::MalformedProfile(format!("target {x} outside [0,1]")));
            }
        }
        Ok(TargetProfile { p, r })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// Event indices sorted by decreasing `r_i / p_i`, ties broken by
/// ascending index. Events with `p_i = 0` sort last.
fn ratio_sorted(p: &[f64], r: &[f64], ids: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = ids.to_vec();
    order.sort_by(|&a, &b| {
        let ra = if p[a] > 0.0 { r[a] / p[a] } else { f64::NEG_INFINITY };
        let rb = if p[b] > 0.0 { r[b] / p[b] } else { f64::NEG_INFINITY };
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    order
}

/// Largest scaling `y` such that targets `y * r` stay feasible.
///
/// By the prefix-maximality claim it suffices to scan prefixes of the
/// ratio-sorted order: `y = min (1 - prod(1-p)) / sum r` over prefixes
/// with positive target sum. Returns 0 when some event has a positive
/// target but zero probability, and +inf when all targets are zero.
pub fn feasibility_margin(profile: &TargetProfile) -> f64 {
    if profile
        .p
        .iter()
        .zip(&profile.r)
        .any(|(&p, &r)| p == 0.0 && r > 0.0)
    {
        return 0.0;
    }
    let ids: Vec<usize> = (0..profile.len()).collect();
    let order = ratio_sorted(&profile.p, &profile.r, &ids);
    let mut sum_r = 0.0;
    let mut prod = 1.0;
    let mut y = f64::INFINITY;
    for &i in &order {
        sum_r += profile.r[i];
        prod *= 1.0 - profile.p[i];
        if sum_r > 0.0 {
            y = y.min((1.0 - prod) / sum_r);
        }
    }
    y
}

/// Whether the prefix minimum of the feasibility margin equals the
/// minimum over all non-empty subsets (the prefix-maximality claim).
/// Exhaustive; limited to `k <= 15`.
pub fn prefix_feasibility_equals_full(profile: &TargetProfile) -> Result<bool> {
    let k = profile.len();
    if k > 15 {
        return Err(Error::InstanceTooLarge {
            actual: k,
            limit: 15,
            unit: "events",
        });
    }
    let prefix_min = feasibility_margin(profile);
    let mut subset_min = f64::INFINITY;
    for mask in 1u32..(1u32 << k) {
        let mut sum_r = 0.0;
        let mut prod = 1.0;
        for i in 0..k {
            if mask >> i & 1 == 1 {
                if profile.p[i] == 0.0 && profile.r[i] > 0.0 {
                    subset_min = 0.0;
                }
                sum_r += profile.r[i];
                prod *= 1.0 - profile.p[i];
            }
        }
        if sum_r > 0.0 {
            subset_min = subset_min.min((1.0 - prod) / sum_r);
        }
    }
    let same = if prefix_min.is_infinite() || subset_min.is_infinite() {
        prefix_min.is_infinite() && subset_min.is_infinite()
    } else {
        (prefix_min - subset_min).abs() <= 1e-9 * (1.0 + subset_min.abs())
    };
    Ok(same)
}

/// A distribution over permutations of the event set, represented as a
/// mixture/split tree (the LP solution has factorial support; the tree
/// keeps sampling O(k) and exact evaluation polynomial). Nodes live in an
/// arena so deep mixing chains do not recurse.
#[derive(Debug, Clone)]
pub struct OrderPolicy {
    nodes: Vec<Node>,
    root: usize,
    /// Events with `p = 0, r = 0`, appended at the end of every order.
    tail: Vec<usize>,
    num_events: usize,
}

#[derive(Debug, Clone)]
enum Node {
    /// Probe in the stored order.
    Fixed(Vec<usize>),
    /// With probability `z` the fixed order, else the residual policy.
    Mix {
        z: f64,
        fixed: Vec<usize>,
        rest: usize,
    },
    /// All prefix events before all suffix events, sampled independently.
    Split {
        prefix_events: Vec<usize>,
        prefix: usize,
        suffix: usize,
    },
}

impl OrderPolicy {
    pub fn num_events(&self) -> usize {
        self.num_events
    }

    /// Tree node count (diagnostic; construction is O(k^2)).
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

struct Builder<'a> {
    p: &'a [f64],
    max_depth: usize,
}

/// Builds a policy whose exact first-occurrence probabilities meet the
/// (step-0 scaled) targets. Errors when the profile is infeasible, i.e.
/// some event has a positive target but zero probability.
pub fn build_policy(profile: &TargetProfile) -> Result<OrderPolicy> {
    let k = profile.len();
    let mut active = Vec::new();
    let mut tail = Vec::new();
    for i in 0..k {
        if profile.p[i] > 0.0 {
            active.push(i);
        } else if profile.r[i] > SLACK_TOL {
            return Err(Error::Infeasible(format!(
                "event {i} has target {} but probability 0",
                profile.r[i]
            )));
        } else {
            tail.push(i);
        }
    }
    if active.is_empty() {
        return Ok(OrderPolicy {
            nodes: vec![Node::Fixed(Vec::new())],
            root: 0,
            tail,
            num_events: k,
        });
    }

    // Step 0: scale targets so some prefix constraint is tight.
    let y = feasibility_margin(profile);
    let mut r = profile.r.clone();
    if y.is_finite() {
        for x in &mut r {
            *x *= y;
        }
    }

    let builder = Builder {
        p: &profile.p,
        max_depth: 4 * k + 8,
    };
    let order = ratio_sorted(&profile.p, &r, &active);
    let targets: Vec<f64> = order.iter().map(|&i| r[i]).collect();
    let nodes = builder.solve_all(order, targets)?;
    Ok(OrderPolicy {
        nodes,
        root: 0,
        tail,
        num_events: k,
    })
}

impl Builder<'_> {
    /// Worklist construction: each item fills one pre-reserved arena slot
    /// and may enqueue children into fresh slots. Iterative so that deep
    /// mixing chains never exhaust the call stack.
    fn solve_all(&self, order: Vec<usize>, targets: Vec<f64>) -> Result<Vec<Node>> {
        let mut nodes: Vec<Node> = vec![Node::Fixed(Vec::new())];
        let mut work: Vec<(Vec<usize>, Vec<f64>, usize, usize)> = vec![(order, targets, 0, 0)];
        while let Some((order, r, depth, slot)) = work.pop() {
            nodes[slot] = self.step(&order, &r, depth, &mut nodes, &mut work)?;
        }
        Ok(nodes)
    }

    /// `order` is ratio-sorted (decreasing r/p); `r[j]` is the target of
    /// event `order[j]`.
    fn step(
        &self,
        order: &[usize],
        r: &[f64],
        depth: usize,
        nodes: &mut Vec<Node>,
        work: &mut Vec<(Vec<usize>, Vec<f64>, usize, usize)>,
    ) -> Result<Node> {
        if depth > self.max_depth {
            return Err(Error::Infeasible(
                "recursion depth exceeded; targets are numerically degenerate".into(),
            ));
        }
        let k = order.len();
        if k == 1 {
            return Ok(Node::Fixed(vec![order[0]]));
        }

        // The bisection tolerates prefix violations up to SLACK_TOL, so a
        // subproblem can arrive infeasible by a rounding-sized amount.
        // Rescale onto the feasible region; the binding prefix becomes
        // exactly tight and splits below instead of stalling the mixer.
        let clamped = self.clamp_to_margin(order, r);
        let r = clamped.as_deref().unwrap_or(r);

        // Divide-and-conquer at a tight proper prefix.
        if let Some(split) = self.tight_proper_prefix(order, r) {
            let prefix: Vec<usize> = order[..split].to_vec();
            let suffix: Vec<usize> = order[split..].to_vec();
            let survive: f64 = prefix.iter().map(|&i| 1.0 - self.p[i]).product();
            let prefix_r: Vec<f64> = r[..split].to_vec();
            let suffix_r: Vec<f64> = r[split..].iter().map(|&x| x / survive).collect();
            let (prefix_order, prefix_targets) = self.resort(&prefix, &prefix_r);
            let (suffix_order, suffix_targets) = self.resort(&suffix, &suffix_r);
            let prefix_slot = nodes.len();
            nodes.push(Node::Fixed(Vec::new()));
            let suffix_slot = nodes.len();
            nodes.push(Node::Fixed(Vec::new()));
            work.push((prefix_order, prefix_targets, depth + 1, prefix_slot));
            work.push((suffix_order, suffix_targets, depth + 1, suffix_slot));
            return Ok(Node::Split {
                prefix_events: prefix,
                prefix: prefix_slot,
                suffix: suffix_slot,
            });
        }

        // Slack removal: mix the decreasing-index order (lowest ratio
        // first) with the solution for the residual targets, at the
        // largest feasible mixing weight.
        let fixed: Vec<usize> = order.iter().rev().copied().collect();
        if self.residual_feasible(order, r, 1.0) {
            return Ok(Node::Fixed(fixed));
        }
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        while hi - lo > Z_TOL {
            let mid = 0.5 * (lo + hi);
            if self.residual_feasible(order, r, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let z = lo;
        if z > 1.0 - 1e-9 {
            // The residual amplification 1/(1-z) is numerically useless
            // this close to 1; the fixed order meets the targets up to
            // rounding noise.
            return Ok(Node::Fixed(fixed));
        }
        let residual = self.residual_targets(order, r, z);
        let (res_order, res_targets) = self.resort(order, &residual);
        let rest_slot = nodes.len();
        nodes.push(Node::Fixed(Vec::new()));
        work.push((res_order, res_targets, depth + 1, rest_slot));
        Ok(Node::Mix {
            z,
            fixed,
            rest: rest_slot,
        })
    }

    /// Margin over prefixes of the ratio-sorted `order`; `Some(scaled)`
    /// when the targets overshoot feasibility and need shrinking.
    fn clamp_to_margin(&self, order: &[usize], r: &[f64]) -> Option<Vec<f64>> {
        let mut sum_r = 0.0;
        let mut prod = 1.0;
        let mut y = f64::INFINITY;
        for (j, &i) in order.iter().enumerate() {
            sum_r += r[j];
            prod *= 1.0 - self.p[i];
            if sum_r > 0.0 {
                y = y.min((1.0 - prod) / sum_r);
            }
        }
        (y < 1.0).then(|| r.iter().map(|&x| x * y).collect())
    }

    fn resort(&self, ids: &[usize], r_by_pos: &[f64]) -> (Vec<usize>, Vec<f64>) {
        let mut full_r = vec![0.0; self.p.len()];
        for (j, &i) in ids.iter().enumerate() {
            full_r[i] = r_by_pos[j];
        }
        let order = ratio_sorted(self.p, &full_r, ids);
        let targets = order.iter().map(|&i| full_r[i]).collect();
        (order, targets)
    }

    /// Smallest proper prefix whose constraint is tight:
    /// `sum r + prod (1-p) = 1`.
    fn tight_proper_prefix(&self, order: &[usize], r: &[f64]) -> Option<usize> {
        let mut sum_r = 0.0;
        let mut prod = 1.0;
        for j in 0..order.len() - 1 {
            sum_r += r[j];
            prod *= 1.0 - self.p[order[j]];
            if sum_r > 0.0 && (sum_r + prod - 1.0).abs() <= SLACK_TOL {
                return Some(j + 1);
            }
        }
        None
    }

    /// Residual targets after probing the decreasing-index order with
    /// probability `z`: `r'_j = (r_j - z p_j prod_{i>j}(1-p_i)) / (1-z)`,
    /// clamped at zero.
    fn residual_targets(&self, order: &[usize], r: &[f64], z: f64) -> Vec<f64> {
        let k = order.len();
        let mut tail_survive = vec![1.0f64; k];
        for j in (0..k - 1).rev() {
            tail_survive[j] = tail_survive[j + 1] * (1.0 - self.p[order[j + 1]]);
        }
        (0..k)
            .map(|j| {
                let achieved = z * self.p[order[j]] * tail_survive[j];
                ((r[j] - achieved) / (1.0 - z)).max(0.0)
            })
            .collect()
    }

    /// Whether the residual profile at mixing weight `z` stays feasible.
    /// The residual targets need not keep the parent's ratio order, so the
    /// prefix checks run on the re-sorted residual profile.
    fn residual_feasible(&self, order: &[usize], r: &[f64], z: f64) -> bool {
        let k = order.len();
        if z >= 1.0 {
            // Limit case: the fixed order alone must meet every target.
            let mut tail_survive = vec![1.0f64; k];
            for j in (0..k - 1).rev() {
                tail_survive[j] = tail_survive[j + 1] * (1.0 - self.p[order[j + 1]]);
            }
            return (0..k).all(|j| r[j] <= self.p[order[j]] * tail_survive[j] + FEAS_TOL);
        }
        let residual = self.residual_targets(order, r, z);
        let (res_order, res_targets) = self.resort(order, &residual);
        // Only proper prefixes: mixing scales the full-set slack by a
        // positive factor, so that constraint never newly binds; checking
        // it would let accumulated rounding freeze the bisection at 0.
        let mut sum_r = 0.0;
        let mut prod = 1.0;
        for j in 0..k - 1 {
            sum_r += res_targets[j];
            prod *= 1.0 - self.p[res_order[j]];
            if sum_r - (1.0 - prod) > FEAS_TOL {
                return false;
            }
        }
        true
    }
}

/// Draws one permutation of all events in O(k) node visits.
pub fn sample_order<R: Rng>(policy: &OrderPolicy, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(policy.num_events);
    let mut stack = vec![policy.root];
    while let Some(id) = stack.pop() {
        match &policy.nodes[id] {
            Node::Fixed(order) => out.extend_from_slice(order),
            Node::Mix { z, fixed, rest } => {
                if rng.gen::<f64>() < *z {
                    out.extend_from_slice(fixed);
                } else {
                    stack.push(*rest);
                }
            }
            Node::Split { prefix, suffix, .. } => {
                stack.push(*suffix);
                stack.push(*prefix);
            }
        }
    }
    out.extend_from_slice(&policy.tail);
    out
}

/// Exact first-occurrence probabilities under the policy: entry `i` is the
/// probability that event `i` occurs and every event probed before it does
/// not. Computed by tree traversal without enumerating permutations.
pub fn first_occurrence_probs(policy: &OrderPolicy, p: &[f64]) -> Vec<f64> {
    assert_eq!(p.len(), policy.num_events, "probability vector length");
    let mut out = vec![0.0; policy.num_events];
    let mut stack = vec![(policy.root, 1.0f64)];
    while let Some((id, weight)) = stack.pop() {
        match &policy.nodes[id] {
            Node::Fixed(order) => {
                let mut survive = 1.0;
                for &i in order {
                    out[i] += weight * survive * p[i];
                    survive *= 1.0 - p[i];
                }
            }
            Node::Mix { z, fixed, rest } => {
                let mut survive = 1.0;
                for &i in fixed {
                    out[i] += weight * z * survive * p[i];
                    survive *= 1.0 - p[i];
                }
                stack.push((*rest, weight * (1.0 - z)));
            }
            Node::Split {
                prefix_events,
                prefix,
                suffix,
            } => {
                stack.push((*prefix, weight));
                let survive: f64 = prefix_events.iter().map(|&i| 1.0 - p[i]).product();
                stack.push((*suffix, weight * survive));
            }
        }
    }
    // Tail events have p = 0 and never occur first.
    out
}

/// Scales matching-membership targets `q` down by the factor
/// `delta = (1 - exp(-sum q / alpha)) / sum q` so the resulting profile is
/// feasible for the order sampler whenever every ratio `q_i / p_i` is
/// below `alpha`. Estimation noise can still break feasibility, so the
/// targets are additionally clamped by the step-0 margin when needed.
pub fn delta_scaled_targets(q: &[f64], p: &[f64], alpha: f64) -> Result<TargetProfile> {
    if q.len() != p.len() {
        return Err(Error::MalformedProfile(format!(
            "{} targets vs {} probabilities",
            q.len(),
            p.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("alpha {alpha} outside (0,1)")));
    }
    let sum_q: f64 = q.iter().sum();
    let delta = if sum_q < 1e-12 {
        1.0 / alpha
    } else {
        (1.0 - (-sum_q / alpha).exp()) / sum_q
    };
    let mut r: Vec<f64> = q.iter().map(|&x| (delta * x).min(1.0)).collect();
    let profile = TargetProfile::new(p.to_vec(), r.clone())?;
    let y = feasibility_margin(&profile);
    if y < 1.0 {
        for x in &mut r {
            *x *= y;
        }
    }
    TargetProfile::new(p.to_vec(), r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    /// Fully independent oracle: expand the policy into its explicit
    /// distribution over permutations and evaluate first-occurrence
    /// probabilities directly. Only usable for small k.
    fn enumerate_policy(policy: &OrderPolicy, p: &[f64]) -> Vec<f64> {
        fn expand(nodes: &[Node], id: usize) -> Vec<(Vec<usize>, f64)> {
            match &nodes[id] {
                Node::Fixed(order) => vec![(order.clone(), 1.0)],
                Node::Mix { z, fixed, rest } => {
                    let mut all = vec![(fixed.clone(), *z)];
                    for (perm, w) in expand(nodes, *rest) {
                        all.push((perm, w * (1.0 - z)));
                    }
                    all
                }
                Node::Split { prefix, suffix, .. } => {
                    let mut all = Vec::new();
                    for (a, wa) in expand(nodes, *prefix) {
                        for (b, wb) in expand(nodes, *suffix) {
                            let mut perm = a.clone();
                            perm.extend_from_slice(&b);
                            all.push((perm, wa * wb));
                        }
                    }
                    all
                }
            }
        }
        let mut out = vec![0.0; p.len()];
        for (perm, w) in expand(&policy.nodes, policy.root) {
            let mut survive = 1.0;
            for &i in &perm {
                out[i] += w * survive * p[i];
                survive *= 1.0 - p[i];
            }
        }
        out
    }

    fn random_feasible_profile<R: Rng>(k: usize, rng: &mut R) -> TargetProfile {
        let p: Vec<f64> = (0..k).map(|_| 0.05 + 0.9 * rng.gen::<f64>()).collect();
        let raw: Vec<f64> = p.iter().map(|&pi| pi * rng.gen::<f64>()).collect();
        let y = feasibility_margin(&TargetProfile::new(p.clone(), raw.clone()).unwrap());
        // Scale to tightness (stress case) or strictly inside.
        let s = if rng.gen::<bool>() { y } else { y * rng.gen::<f64>() };
        let r = raw.iter().map(|&x| (x * s).min(1.0)).collect();
        TargetProfile::new(p, r).unwrap()
    }

    #[test]
    fn margin_examples() {
        let tight = TargetProfile::new(vec![0.5], vec![0.5]).unwrap();
        assert!((feasibility_margin(&tight) - 1.0).abs() < 1e-12);

        let symmetric = TargetProfile::new(vec![0.5, 0.5], vec![0.375, 0.375]).unwrap();
        assert!((feasibility_margin(&symmetric) - 1.0).abs() < 1e-12);

        // Prefix {1} binds: 0.5 / 0.6.
        let skewed = TargetProfile::new(vec![0.5, 0.5], vec![0.6, 0.1]).unwrap();
        assert!((feasibility_margin(&skewed) - 0.5 / 0.6).abs() < 1e-12);

        let hopeless = TargetProfile::new(vec![0.0, 0.5], vec![0.1, 0.1]).unwrap();
        assert_eq!(feasibility_margin(&hopeless), 0.0);

        let no_targets = TargetProfile::new(vec![0.3, 0.7], vec![0.0, 0.0]).unwrap();
        assert!(feasibility_margin(&no_targets).is_infinite());
    }

    #[test]
    fn prefix_minimum_equals_subset_minimum() {
        let mut r = rng::master(11);
        for case in 0..200 {
            let k = 2 + (case % 9);
            let profile = random_feasible_profile(k, &mut r);
            assert!(prefix_feasibility_equals_full(&profile).unwrap(), "case {case}");
        }
        // Uniform profile and a zero-target event.
        let uniform = TargetProfile::new(vec![0.4; 3], vec![0.2; 3]).unwrap();
        assert!(prefix_feasibility_equals_full(&uniform).unwrap());
        let with_zero = TargetProfile::new(vec![0.4, 0.6, 0.5], vec![0.3, 0.0, 0.2]).unwrap();
        assert!(prefix_feasibility_equals_full(&with_zero).unwrap());
    }

    #[test]
    fn single_event_policy() {
        let profile = TargetProfile::new(vec![0.5], vec![0.4]).unwrap();
        let policy = build_policy(&profile).unwrap();
        let probs = first_occurrence_probs(&policy, &profile.p);
        assert!((probs[0] - 0.5).abs() < 1e-12);
        assert_eq!(sample_order(&policy, &mut rng::master(0)), vec![0]);
    }

    #[test]
    fn symmetric_two_event_policy_achieves_uniform_mix_value() {
        // Both orders mixed equally give P(first) = 0.5*0.5 + 0.5*0.25.
        let profile = TargetProfile::new(vec![0.5, 0.5], vec![0.375, 0.375]).unwrap();
        let policy = build_policy(&profile).unwrap();
        let probs = first_occurrence_probs(&policy, &profile.p);
        assert!((probs[0] - 0.375).abs() < 1e-9, "{probs:?}");
        assert!((probs[1] - 0.375).abs() < 1e-9, "{probs:?}");
    }

    #[test]
    fn fixed_order_probabilities() {
        // Targets achievable by the pure order (2 then 1): event 1 needs
        // p1*(1-p2) and event 2 needs p2.
        let profile = TargetProfile::new(vec![0.5, 0.5], vec![0.25, 0.5]).unwrap();
        let policy = build_policy(&profile).unwrap();
        let probs = first_occurrence_probs(&policy, &profile.p);
        assert!(probs[0] >= 0.25 - 1e-9);
        assert!(probs[1] >= 0.5 - 1e-9);
        let total: f64 = probs.iter().sum();
        assert!((total - 0.75).abs() < 1e-9);
    }

    #[test]
    fn random_profiles_meet_targets_exactly() {
        let mut r = rng::master(23);
        for case in 0..300 {
            let k = 1 + (case % 8);
            let profile = random_feasible_profile(k, &mut r);
            let policy = build_policy(&profile).unwrap();
            let probs = first_occurrence_probs(&policy, &profile.p);
            for i in 0..k {
                assert!(
                    probs[i] >= profile.r[i] - 1e-9,
                    "case {case} event {i}: {} < {}",
                    probs[i],
                    profile.r[i]
                );
            }
            // Conservation: some event occurs first iff any occurs.
            let total: f64 = probs.iter().sum();
            let any: f64 = 1.0 - profile.p.iter().map(|&x| 1.0 - x).product::<f64>();
            assert!((total - any).abs() < 1e-9, "case {case}");
        }
    }

    #[test]
    fn recursive_evaluation_matches_enumeration() {
        let mut r = rng::master(31);
        for case in 0..60 {
            let k = 2 + (case % 5);
            let profile = random_feasible_profile(k, &mut r);
            let policy = build_policy(&profile).unwrap();
            let fast = first_occurrence_probs(&policy, &profile.p);
            let slow = enumerate_policy(&policy, &profile.p);
            for i in 0..k {
                assert!((fast[i] - slow[i]).abs() < 1e-9, "case {case} event {i}");
            }
        }
    }

    #[test]
    fn sampled_orders_are_permutations() {
        let mut r = rng::master(37);
        let profile = random_feasible_profile(6, &mut r);
        let policy = build_policy(&profile).unwrap();
        for _ in 0..200 {
            let mut order = sample_order(&policy, &mut r);
            assert_eq!(order.len(), 6);
            order.sort_unstable();
            assert_eq!(order, vec![0, 1, 2, 3, 4, 5]);
        }
    }

    #[test]
    fn empirical_first_occurrence_matches_exact() {
        let mut r = rng::master(41);
        let profile = random_feasible_profile(5, &mut r);
        let policy = build_policy(&profile).unwrap();
        let exact = first_occurrence_probs(&policy, &profile.p);
        let trials = 200_000usize;
        let mut counts = vec![0usize; 5];
        for _ in 0..trials {
            let order = sample_order(&policy, &mut r);
            for &i in &order {
                if r.gen::<f64>() < profile.p[i] {
                    counts[i] += 1;
                    break;
                }
            }
        }
        for i in 0..5 {
            let freq = counts[i] as f64 / trials as f64;
            let sd = (exact[i] * (1.0 - exact[i]) / trials as f64).sqrt();
            assert!(
                (freq - exact[i]).abs() <= 3.5 * sd + 1e-4,
                "event {i}: freq {freq} exact {}",
                exact[i]
            );
        }
    }

    #[test]
    fn zero_probability_events_are_dropped_to_the_tail() {
        let profile = TargetProfile::new(vec![0.5, 0.0, 0.5], vec![0.3, 0.0, 0.3]).unwrap();
        let policy = build_policy(&profile).unwrap();
        let order = sample_order(&policy, &mut rng::master(0));
        assert_eq!(order.len(), 3);
        assert_eq!(*order.last().unwrap(), 1);
        let probs = first_occurrence_probs(&policy, &profile.p);
        assert_eq!(probs[1], 0.0);
        assert!(probs[0] >= 0.3 - 1e-9 && probs[2] >= 0.3 - 1e-9);

        // Positive target on a zero-probability event is hopeless.
        let bad = TargetProfile::new(vec![0.5, 0.0], vec![0.3, 0.1]).unwrap();
        assert!(matches!(build_policy(&bad), Err(Error::Infeasible(_))));
    }

    #[test]
    fn construction_scales_to_large_k() {
        let mut r = rng::master(43);
        let k = 2000;
        let profile = random_feasible_profile(k, &mut r);
        let policy = build_policy(&profile).unwrap();
        assert!(policy.node_count() < k * k);
        let order = sample_order(&policy, &mut r);
        assert_eq!(order.len(), k);
    }

    #[test]
    fn delta_scaling_examples() {
        // sum q = 1, alpha = 0.255: delta = 1 - e^{-1/0.255}.
        let q = vec![0.5, 0.5];
        let p = vec![0.9, 0.9];
        let profile = delta_scaled_targets(&q, &p, 0.255).unwrap();
        let delta = 1.0 - (-1.0f64 / 0.255).exp();
        assert!((delta - 0.98019).abs() < 1e-4);
        assert!((profile.r[0] - 0.5 * delta).abs() < 1e-9 || profile.r[0] < 0.5 * delta);

        // A single zero target yields an all-zero profile.
        let profile = delta_scaled_targets(&[0.0], &[0.5], 0.255).unwrap();
        assert_eq!(profile.r, vec![0.0]);

        // Empty input is a valid no-op.
        let profile = delta_scaled_targets(&[], &[], 0.255).unwrap();
        assert!(profile.is_empty());
        assert!(build_policy(&profile).is_ok());
    }

    #[test]
    fn delta_scaled_exact_q_is_feasible_without_clamping() {
        // The scaling chain: for any subset with ratios below alpha,
        // 1 - prod(1-p) >= delta * sum q. Verified by subset enumeration
        // on random (q, p) vectors with q/p < alpha.
        let mut r = rng::master(47);
        let alpha = 0.255;
        for case in 0..100 {
            let k = 1 + (case % 12);
            let p: Vec<f64> = (0..k).map(|_| 0.05 + 0.9 * r.gen::<f64>()).collect();
            let q: Vec<f64> = p
                .iter()
                .map(|&pi| pi * alpha * 0.999 * r.gen::<f64>())
                .collect();
            let sum_q: f64 = q.iter().sum();
            let delta = if sum_q < 1e-12 {
                1.0 / alpha
            } else {
                (1.0 - (-sum_q / alpha).exp()) / sum_q
            };
            for mask in 1u32..(1u32 << k) {
                let mut sq = 0.0;
                let mut prod = 1.0;
                for i in 0..k {
                    if mask >> i & 1 == 1 {
                        sq += q[i];
                        prod *= 1.0 - p[i];
                    }
                }
                assert!(
                    1.0 - prod >= delta * sq - 1e-9,
                    "case {case} mask {mask:b}"
                );
            }
            // Hence no clamping is needed on the built profile.
            let profile = delta_scaled_targets(&q, &p, alpha).unwrap();
            for i in 0..k {
                assert!((profile.r[i] - delta * q[i]).abs() < 1e-9);
            }
        }
    }
}
