//! Offline matching machinery on realized graphs: blossom maximum
//! matching, an exhaustive test oracle, the canonical (lexicographically
//! smallest) maximum matching that pins down `q*`, and a length-bounded
//! approximate matching.

use crate::graph::{Matching, Pair, RealizedGraph};
use crate::{Error, Result};
use std::collections::VecDeque;

/// Edge count limit for the exhaustive oracle.
pub const BRUTE_FORCE_EDGE_LIMIT: usize = 24;

fn adjacency(g: &RealizedGraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.n()];
    for e in g.edges() {
        adj[e.lo()].push(e.hi());
        adj[e.hi()].push(e.lo());
    }
    // edges() is sorted, so each list is already ascending in the other
    // endpoint for the lo side; sort to make the hi side ascending too.
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

/// Maximum-cardinality matching on a general graph via Edmonds' blossom
/// algorithm, O(n^3). Deterministic: free vertices and adjacency are
/// scanned in ascending index order.
pub fn max_matching(g: &RealizedGraph) -> Matching {
    let n = g.n();
    let adj = adjacency(g);
    let mut mate: Vec<Option<usize>> = vec![None; n];

    for root in 0..n {
        if mate[root].is_some() {
            continue;
        }
        if let Some(leaf) = find_augmenting_path(n, &adj, &mate, root) {
            // Flip matched/unmatched edges back along the parent chain.
            let (mut v, parent) = leaf;
            loop {
                let pv = parent[v];
                let next = mate[pv];
                mate[v] = Some(pv);
                mate[pv] = Some(v);
                match next {
                    Some(w) => v = w,
                    None => break,
                }
            }
        }
    }

    (0..n)
        .filter_map(|u| mate[u].filter(|&v| u < v).map(|v| Pair::new(u, v)))
        .collect()
}

/// BFS alternating-tree search with blossom contraction. On success
/// returns the free leaf plus the parent array to augment along.
fn find_augmenting_path(
    n: usize,
    adj: &[Vec<usize>],
    mate: &[Option<usize>],
    root: usize,
) -> Option<(usize, Vec<usize>)> {
    let mut parent = vec![usize::MAX; n];
    let mut base: Vec<usize> = (0..n).collect();
    let mut used = vec![false; n];
    let mut queue = VecDeque::new();
    used[root] = true;
    queue.push_back(root);

    while let Some(v) = queue.pop_front() {
        for &to in &adj[v] {
            if base[v] == base[to] || mate[v] == Some(to) {
                continue;
            }
            if to == root || mate[to].map_or(false, |m| parent[m] != usize::MAX) {
                // Odd cycle: contract the blossom around the common base.
                let cur_base = lowest_common_base(n, &base, &parent, mate, v, to);
                let mut in_blossom = vec![false; n];
                mark_blossom_path(&base, &mut parent, mate, &mut in_blossom, v, cur_base, to);
                mark_blossom_path(&base, &mut parent, mate, &mut in_blossom, to, cur_base, v);
                for i in 0..n {
                    if in_blossom[base[i]] {
                        base[i] = cur_base;
                        if !used[i] {
                            used[i] = true;
                            queue.push_back(i);
                        }
                    }
                }
            } else if parent[to] == usize::MAX {
                parent[to] = v;
                match mate[to] {
                    None => return Some((to, parent)),
                    Some(m) => {
                        if !used[m] {
                            used[m] = true;
                            queue.push_back(m);
                        }
                    }
                }
            }
        }
    }
    None
}

fn lowest_common_base(
    n: usize,
    base: &[usize],
    parent: &[usize],
    mate: &[Option<usize>],
    mut a: usize,
    mut b: usize,
) -> usize {
    let mut seen = vec![false; n];
    loop {
        a = base[a];
        seen[a] = true;
        match mate[a] {
            Some(m) if parent[m] != usize::MAX => a = parent[m],
            _ => break,
        }
    }
    loop {
        b = base[b];
        if seen[b] {
            return b;
        }
        b = parent[mate[b].expect("non-base tree vertex is matched")];
    }
}

fn mark_blossom_path(
    base: &[usize],
    parent: &mut [usize],
    mate: &[Option<usize>],
    in_blossom: &mut [bool],
    mut v: usize,
    cur_base: usize,
    mut child: usize,
) {
    while base[v] != cur_base {
        in_blossom[base[v]] = true;
        let m = mate[v].expect("blossom interior vertex is matched");
        in_blossom[base[m]] = true;
        parent[v] = child;
        child = m;
        v = parent[m];
    }
}

/// Exhaustive maximum matching: returns the lexicographically smallest
/// maximum matching under ascending edge-index order. Test oracle and the
/// canonical tie-break that makes `q*` well-defined.
pub fn brute_force_max_matching(g: &RealizedGraph) -> Result<Matching> {
    let edges: Vec<Pair> = g.edges().collect();
    if edges.len() > BRUTE_FORCE_EDGE_LIMIT {
        return Err(Error::InstanceTooLarge {
            actual: edges.len(),
            limit: BRUTE_FORCE_EDGE_LIMIT,
            unit: "edges",
        });
    }
    let mut used = vec![false; g.n()];
    let mut current: Vec<usize> = Vec::new();
    let mut best: Vec<usize> = Vec::new();
    search(&edges, 0, &mut used, &mut current, &mut best);
    Ok(best.iter().map(|&i| edges[i]).collect())
}

fn search(
    edges: &[Pair],
    i: usize,
    used: &mut [bool],
    current: &mut Vec<usize>,
    best: &mut Vec<usize>,
) {
    // Even taking every remaining edge cannot beat the best size.
    if current.len() + (edges.len() - i) < best.len() {
        return;
    }
    if i == edges.len() {
        if current.len() > best.len() || (current.len() == best.len() && *current < *best) {
            *best = current.clone();
        }
        return;
    }
    let e = edges[i];
    if !used[e.lo()] && !used[e.hi()] {
        used[e.lo()] = true;
        used[e.hi()] = true;
        current.push(i);
        search(edges, i + 1, used, current, best);
        current.pop();
        used[e.lo()] = false;
        used[e.hi()] = false;
    }
    search(edges, i + 1, used, current, best);
}

/// Canonical maximum matching for arbitrary edge counts: the
/// lexicographically smallest maximum matching, built by greedy inclusion
/// with blossom feasibility checks.
pub fn canonical_max_matching(g: &RealizedGraph) -> Matching {
    if g.num_edges() <= BRUTE_FORCE_EDGE_LIMIT {
        return brute_force_max_matching(g).expect("within brute-force limit");
    }
    let target = max_matching(g).len();
    let mut chosen = Matching::new();
    let mut excluded = vec![false; g.n()];
    for e in g.edges() {
        if excluded[e.lo()] || excluded[e.hi()] {
            continue;
        }
        // Keep e iff the rest of the graph can still complete a maximum
        // matching.
        let remaining: Vec<Pair> = g
            .edges()
            .filter(|f| {
                !excluded[f.lo()]
                    && !excluded[f.hi()]
                    && !f.touches(e.lo())
                    && !f.touches(e.hi())
            })
            .collect();
        let sub = RealizedGraph::new(g.n(), remaining);
        if chosen.len() + 1 + max_matching(&sub).len() >= target {
            excluded[e.lo()] = true;
            excluded[e.hi()] = true;
            chosen.insert(e);
        }
        if chosen.len() == target {
            break;
        }
    }
    chosen
}

/// Matching of size at least `(1 - zeta)` times maximum, by augmenting-path
/// search with path length capped at `2*ceil(1/zeta) - 1` edges.
///
/// The search enumerates all simple alternating paths up to the cap, so
/// when it stops no augmenting path of capped length exists; every path in
/// the symmetric difference with a maximum matching then has at least
/// `ceil(1/zeta)` matched edges, which gives the factor.
pub fn approx_max_matching(g: &RealizedGraph, zeta: f64) -> Result<Matching> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::InvalidParams(format!("zeta {zeta} outside (0,1)")));
    }
    let t = (1.0 / zeta).ceil() as usize;
    let cap = 2 * t - 1;
    let n = g.n();
    let adj = adjacency(g);
    let mut mate: Vec<Option<usize>> = vec![None; n];

    loop {
        let mut augmented = false;
        for start in 0..n {
            if mate[start].is_some() {
                continue;
            }
            let mut in_path = vec![false; n];
            in_path[start] = true;
            let mut path = vec![start];
            if bounded_alternating_dfs(&adj, &mut mate, &mut in_path, &mut path, start, cap) {
                augmented = true;
            }
        }
        if !augmented {
            break;
        }
    }

    Ok((0..n)
        .filter_map(|u| mate[u].filter(|&v| u < v).map(|v| Pair::new(u, v)))
        .collect())
}

/// Backtracking search for an augmenting path with at most `budget` edges
/// starting at `v` (an unmatched endpoint or the far end of a matched
/// edge). Augments in place on success.
fn bounded_alternating_dfs(
    adj: &[Vec<usize>],
    mate: &mut [Option<usize>],
    in_path: &mut [bool],
    path: &mut Vec<usize>,
    v: usize,
    budget: usize,
) -> bool {
    if budget == 0 {
        return false;
    }
    for &u in &adj[v] {
        if in_path[u] {
            continue;
        }
        match mate[u] {
            None => {
                // Augmenting path found: flip along path + (v, u).
                path.push(u);
                let mut i = path.len();
                while i >= 2 {
                    mate[path[i - 1]] = Some(path[i - 2]);
                    mate[path[i - 2]] = Some(path[i - 1]);
                    i -= 2;
                }
                return true;
            }
            Some(w) => {
                if budget >= 3 && !in_path[w] {
                    in_path[u] = true;
                    in_path[w] = true;
                    path.push(u);
                    path.push(w);
                    if bounded_alternating_dfs(adj, mate, in_path, path, w, budget - 2) {
                        return true;
                    }
                    path.pop();
                    path.pop();
                    in_path[u] = false;
                    in_path[w] = false;
                }
            }
        }
    }
    false
}

/// Greedy maximal matching over edges in ascending index order; the
/// classic half-of-maximum baseline.
pub fn greedy_maximal_matching(g: &RealizedGraph) -> Matching {
    let mut used = vec![false; g.n()];
    let mut m = Matching::new();
    for e in g.edges() {
        if !used[e.lo()] && !used[e.hi()] {
            used[e.lo()] = true;
            used[e.hi()] = true;
            m.insert(e);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_graph(n: usize, density: f64, seed: u64) -> RealizedGraph {
        let mut r = rng::master(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if r.gen::<f64>() < density {
                    edges.push(Pair::new(u, v));
                }
            }
        }
        RealizedGraph::new(n, edges)
    }

    #[test]
    fn empty_graph() {
        let g = RealizedGraph::new(5, []);
        assert!(max_matching(&g).is_empty());
        assert!(brute_force_max_matching(&g).unwrap().is_empty());
    }

    #[test]
    fn odd_cycle_needs_blossom() {
        let edges: Vec<Pair> = (0..5).map(|i| Pair::new(i, (i + 1) % 5)).collect();
        let g = RealizedGraph::new(5, edges);
        assert_eq!(max_matching(&g).len(), 2);
    }

    #[test]
    fn flower_graph() {
        // Triangle 0-1-2 with a stem 2-3 and pendant 3-4: maximum is 2 and
        // requires augmenting through the odd cycle.
        let g = RealizedGraph::new(
            5,
            [
                Pair::new(0, 1),
                Pair::new(0, 2),
                Pair::new(1, 2),
                Pair::new(2, 3),
                Pair::new(3, 4),
            ],
        );
        assert_eq!(max_matching(&g).len(), 2);
        assert_eq!(brute_force_max_matching(&g).unwrap().len(), 2);
    }

    #[test]
    fn brute_force_is_lex_smallest() {
        // Triangle: size-1 matching, lexicographically first edge.
        let g = RealizedGraph::new(3, [Pair::new(0, 1), Pair::new(0, 2), Pair::new(1, 2)]);
        let m = brute_force_max_matching(&g).unwrap();
        assert_eq!(m.pairs().collect::<Vec<_>>(), vec![Pair::new(0, 1)]);

        // Disjoint edges: all of them.
        let g = RealizedGraph::new(4, [Pair::new(0, 1), Pair::new(2, 3)]);
        assert_eq!(brute_force_max_matching(&g).unwrap().len(), 2);

        // Complete K4: size 2.
        let mut edges = Vec::new();
        for u in 0..4 {
            for v in (u + 1)..4 {
                edges.push(Pair::new(u, v));
            }
        }
        let g = RealizedGraph::new(4, edges);
        assert_eq!(brute_force_max_matching(&g).unwrap().len(), 2);
    }

    #[test]
    fn blossom_matches_brute_force_on_random_graphs() {
        let mut case = 0u64;
        for n in [4usize, 6, 8, 10] {
            for density in [0.2, 0.5, 0.8] {
                for _ in 0..25 {
                    case += 1;
                    let g = random_graph(n, density, case);
                    if g.num_edges() > BRUTE_FORCE_EDGE_LIMIT {
                        continue;
                    }
                    let fast = max_matching(&g);
                    let slow = brute_force_max_matching(&g).unwrap();
                    assert_eq!(fast.len(), slow.len(), "n={n} density={density} case={case}");
                }
            }
        }
    }

    #[test]
    fn canonical_matches_brute_force() {
        for seed in 0..50 {
            let g = random_graph(7, 0.5, 1000 + seed);
            if g.num_edges() > BRUTE_FORCE_EDGE_LIMIT {
                continue;
            }
            let a = brute_force_max_matching(&g).unwrap();
            let b = canonical_max_matching(&g);
            assert_eq!(a, b, "seed {seed}");
        }
    }

    #[test]
    fn approx_meets_guarantee() {
        for seed in 0..40 {
            let g = random_graph(14, 0.4, 2000 + seed);
            let opt = max_matching(&g).len();
            for zeta in [0.5, 0.34, 0.21] {
                let approx = approx_max_matching(&g, zeta).unwrap();
                assert!(
                    approx.len() as f64 >= (1.0 - zeta) * opt as f64,
                    "seed {seed} zeta {zeta}: {} vs opt {opt}",
                    approx.len()
                );
            }
        }
    }

    #[test]
    fn approx_small_zeta_reaches_optimum_on_disjoint_edges() {
        let g = RealizedGraph::new(6, [Pair::new(0, 1), Pair::new(2, 3), Pair::new(4, 5)]);
        for zeta in [0.9, 0.5, 0.1] {
            assert_eq!(approx_max_matching(&g, zeta).unwrap().len(), 3);
        }
        assert!(approx_max_matching(&g, 0.0).is_err());
        assert!(approx_max_matching(&g, 1.0).is_err());
    }

    #[test]
    fn approx_converges_to_maximum_for_small_zeta() {
        for seed in 0..10 {
            let g = random_graph(30, 0.15, 3000 + seed);
            let opt = max_matching(&g).len();
            let approx = approx_max_matching(&g, 0.12).unwrap();
            assert!(approx.len() as f64 >= (1.0 - 0.12) * opt as f64);
        }
    }

    #[test]
    fn greedy_maximal_is_at_least_half_of_maximum() {
        for seed in 0..100 {
            let g = random_graph(9, 0.5, 4000 + seed);
            let greedy = greedy_maximal_matching(&g);
            let opt = max_matching(&g);
            assert!(2 * greedy.len() >= opt.len());
        }
    }

    #[test]
    fn brute_force_rejects_large_instances() {
        let g = random_graph(12, 0.9, 1);
        assert!(g.num_edges() > BRUTE_FORCE_EDGE_LIMIT);
        assert!(matches!(
            brute_force_max_matching(&g),
            Err(Error::InstanceTooLarge { .. })
        ));
    }
}
