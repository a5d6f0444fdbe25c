//! Minimum-weight vertex cover: exact branch and bound on bitmask graphs
//! (up to 64 vertices, used at <= 16), plus greedy and matching bounds for
//! large conflict graphs.

use crate::scalar::Real;

/// Exact minimum-weight vertex cover of the graph given by adjacency masks.
///
/// Branches on the lowest-indexed uncovered edge, including the lower
/// endpoint first; ties in total weight keep the first cover found, so the
/// witness is deterministic.
pub(crate) fn min_weight_cover_exact<T: Real>(adj: &[u64], weights: &[T]) -> (T, u64) {
    let n = adj.len();
    debug_assert!(n <= 64);
    // Trivial cover: every non-isolated vertex.
    let mut best_mask = 0u64;
    let mut best_w = T::zero();
    for v in 0..n {
        if adj[v] != 0 {
            best_mask |= 1 << v;
            best_w = best_w + weights[v];
        }
    }
    let mut state = (best_w, best_mask);
    branch(adj, weights, 0, T::zero(), &mut state);
    state
}

fn branch<T: Real>(adj: &[u64], weights: &[T], cover: u64, acc: T, best: &mut (T, u64)) {
    if acc >= best.0 {
        return;
    }
    // first uncovered edge (u, v) with u < v
    let n = adj.len();
    let mut found: Option<(usize, usize)> = None;
    for u in 0..n {
        if cover & (1 << u) != 0 {
            continue;
        }
        let nbrs = adj[u] & !cover & !((1u64 << u) | ((1u64 << u) - 1));
        if nbrs != 0 {
            found = Some((u, nbrs.trailing_zeros() as usize));
            break;
        }
    }
    match found {
        None => {
            if acc < best.0 {
                *best = (acc, cover);
            }
        }
        Some((u, v)) => {
            branch(adj, weights, cover | (1 << u), acc + weights[u], best);
            branch(adj, weights, cover | (1 << v), acc + weights[v], best);
        }
    }
}

/// Greedy cover of an explicit edge list: repeatedly removes the vertex with
/// the highest degree-to-weight score. Returns (cover weight, removed flags).
pub(crate) fn greedy_cover<T: Real>(
    n: usize,
    edges: &[(u32, u32)],
    weights: &[T],
) -> (T, Vec<bool>) {
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(u, v) in edges {
        adjacency[u as usize].push(v);
        adjacency[v as usize].push(u);
    }
    let mut degree: Vec<usize> = adjacency.iter().map(|a| a.len()).collect();
    let mut removed = vec![false; n];
    let mut live_edges = edges.len();
    let mut cover_weight = T::zero();
    while live_edges > 0 {
        let mut pick = usize::MAX;
        let mut pick_score = T::neg_infinity();
        for v in 0..n {
            if removed[v] || degree[v] == 0 {
                continue;
            }
            let score = if weights[v] <= T::zero() {
                T::infinity()
            } else {
                T::of(degree[v] as f64) / weights[v]
            };
            if score > pick_score {
                pick_score = score;
                pick = v;
            }
        }
        debug_assert!(pick != usize::MAX);
        removed[pick] = true;
        cover_weight = cover_weight + weights[pick];
        for &u in &adjacency[pick] {
            if !removed[u as usize] {
                degree[u as usize] -= 1;
                live_edges -= 1;
            }
        }
        degree[pick] = 0;
    }
    (cover_weight, removed)
}

/// Lower bound on the minimum-weight vertex cover: a maximal set of
/// vertex-disjoint edges contributes the lighter endpoint of each.
pub(crate) fn matching_lower_bound<T: Real>(n: usize, edges: &[(u32, u32)], weights: &[T]) -> T {
    let mut order: Vec<usize> = (0..edges.len()).collect();
    let key = |e: &(u32, u32)| weights[e.0 as usize].min(weights[e.1 as usize]);
    order.sort_by(|&a, &b| {
        key(&edges[b])
            .partial_cmp(&key(&edges[a]))
            .expect("finite weights")
            .then(edges[a].cmp(&edges[b]))
    });
    let mut used = vec![false; n];
    let mut bound = T::zero();
    for idx in order {
        let (u, v) = edges[idx];
        if !used[u as usize] && !used[v as usize] {
            used[u as usize] = true;
            used[v as usize] = true;
            bound = bound + key(&edges[idx]);
        }
    }
    bound
}
