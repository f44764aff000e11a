//! Exact ground-truth solvers for all nine tasks, sized for level-10
//! instances of the standard ladders.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::domain::{OracleSolution, Payload, ProblemInstance, WeightedGraph};

/// Exact tour search is bounded by ladder design; larger inputs are refused
/// rather than silently degraded to heuristics.
pub const TSP_MAX_VERTICES: u32 = 13;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("target not present in array")]
    NotFound,
    #[error("no path from the first to the last vertex")]
    Unreachable,
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("instance too large for exact search: {vertices} vertices, limit {limit}")]
    SizeLimit { vertices: u32, limit: u32 },
    #[error("infeasible instance: {0}")]
    Infeasible(String),
}

/// Binary search over a strictly increasing array; returns the 0-based index
/// of the target.
pub fn solve_sas(array: &[i64], target: i64) -> Result<usize, OracleError> {
    let mut lo = 0usize;
    let mut hi = array.len();
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if array[mid] < target {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if lo < array.len() && array[lo] == target {
        Ok(lo)
    } else {
        Err(OracleError::NotFound)
    }
}

/// Minimum number of single-character insertions, deletions, and
/// substitutions transforming `a` into `b`.
pub fn solve_edp(a: &str, b: &str) -> u64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (m, n) = (a.len(), b.len());
    let mut table = vec![vec![0u64; n + 1]; m + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = i as u64;
    }
    for (j, cell) in table[0].iter_mut().enumerate() {
        *cell = j as u64;
    }
    for i in 1..=m {
        for j in 1..=n {
            let sub = table[i - 1][j - 1] + u64::from(a[i - 1] != b[j - 1]);
            table[i][j] = sub.min(table[i - 1][j] + 1).min(table[i][j - 1] + 1);
        }
    }
    table[m][n]
}

/// Dijkstra from vertex 1 to vertex `n`; returns one optimal path and its
/// total weight.
pub fn solve_spp(graph: &WeightedGraph) -> Result<(Vec<u32>, u64), OracleError> {
    let n = graph.vertex_count();
    if n == 1 {
        return Ok((vec![1], 0));
    }
    let adj = graph.adjacency();
    let mut dist = vec![u64::MAX; n as usize + 1];
    let mut prev = vec![0u32; n as usize + 1];
    let mut heap = BinaryHeap::new();
    dist[1] = 0;
    heap.push(Reverse((0u64, 1u32)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        if u == n {
            break;
        }
        for &(v, w) in &adj[u as usize] {
            let cand = d + w as u64;
            if cand < dist[v as usize] {
                dist[v as usize] = cand;
                prev[v as usize] = u;
                heap.push(Reverse((cand, v)));
            }
        }
    }
    if dist[n as usize] == u64::MAX {
        return Err(OracleError::Unreachable);
    }
    let mut path = vec![n];
    let mut cur = n;
    while cur != 1 {
        cur = prev[cur as usize];
        path.push(cur);
    }
    path.reverse();
    Ok((path, dist[n as usize]))
}

/// Held-Karp dynamic program over (visited-subset, endpoint) states. Returns
/// one optimal tour as a permutation starting at city 1, plus its cost.
pub fn solve_tsp(graph: &WeightedGraph) -> Result<(Vec<u32>, u64), OracleError> {
    if !graph.is_complete() {
        return Err(OracleError::Param("tour search requires a complete graph".into()));
    }
    let n = graph.vertex_count();
    if n < 2 {
        return Err(OracleError::Param("tour search needs at least 2 cities".into()));
    }
    if n > TSP_MAX_VERTICES {
        return Err(OracleError::SizeLimit { vertices: n, limit: TSP_MAX_VERTICES });
    }
    let d = graph.distance_matrix().expect("complete graph");
    let n = n as usize;
    let dist = |i: usize, j: usize| d[i + 1][j + 1];

    let full = (1usize << n) - 1;
    let mut dp = vec![vec![u64::MAX; n]; 1 << n];
    let mut parent = vec![vec![usize::MAX; n]; 1 << n];
    dp[1][0] = 0;
    for mask in 1..=full {
        if mask & 1 == 0 {
            continue;
        }
        for last in 0..n {
            if mask & (1 << last) == 0 {
                continue;
            }
            let cost = dp[mask][last];
            if cost == u64::MAX {
                continue;
            }
            for next in 1..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let cand = cost + dist(last, next);
                let entry = &mut dp[mask | (1 << next)][next];
                if cand < *entry {
                    *entry = cand;
                    parent[mask | (1 << next)][next] = last;
                }
            }
        }
    }

    let mut best = u64::MAX;
    let mut best_last = usize::MAX;
    for (last, &cost) in dp[full].iter().enumerate().skip(1) {
        if cost != u64::MAX && cost + dist(last, 0) < best {
            best = cost + dist(last, 0);
            best_last = last;
        }
    }

    let mut tour = Vec::with_capacity(n);
    let mut mask = full;
    let mut cur = best_last;
    while cur != usize::MAX {
        tour.push(cur as u32 + 1);
        let p = parent[mask][cur];
        mask &= !(1 << cur);
        cur = p;
    }
    tour.reverse();
    Ok((tour, best))
}

/// True iff an optimal tour costs at most `threshold`.
pub fn decide_tsp(graph: &WeightedGraph, threshold: u64) -> Result<bool, OracleError> {
    let (_, cost) = solve_tsp(graph)?;
    Ok(cost <= threshold)
}

fn degree_order(graph: &WeightedGraph) -> Vec<usize> {
    let n = graph.vertex_count() as usize;
    let mut degree = vec![0usize; n];
    for e in graph.edges() {
        degree[e.u as usize - 1] += 1;
        degree[e.v as usize - 1] += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (Reverse(degree[v]), v));
    order
}

/// Backtracking k-colorability over vertices in descending-degree order,
/// introducing at most one new color per step.
fn try_color(graph: &WeightedGraph, k: u32) -> Option<Vec<u32>> {
    let n = graph.vertex_count() as usize;
    let order = degree_order(graph);
    let mut neighbors = vec![Vec::new(); n];
    for e in graph.edges() {
        neighbors[e.u as usize - 1].push(e.v as usize - 1);
        neighbors[e.v as usize - 1].push(e.u as usize - 1);
    }
    let mut colors = vec![0u32; n];

    fn dfs(
        pos: usize,
        used: u32,
        k: u32,
        order: &[usize],
        neighbors: &[Vec<usize>],
        colors: &mut [u32],
    ) -> bool {
        if pos == order.len() {
            return true;
        }
        let v = order[pos];
        let mut banned = vec![false; k as usize + 1];
        for &u in &neighbors[v] {
            let c = colors[u];
            if c != 0 && c <= k {
                banned[c as usize] = true;
            }
        }
        let limit = k.min(used + 1);
        for c in 1..=limit {
            if banned[c as usize] {
                continue;
            }
            colors[v] = c;
            if dfs(pos + 1, used.max(c), k, order, neighbors, colors) {
                return true;
            }
            colors[v] = 0;
        }
        false
    }

    if dfs(0, 0, k, &order, &neighbors, &mut colors) {
        Some(colors)
    } else {
        None
    }
}

/// Smallest color count admitting a proper coloring, with one witness that
/// uses exactly that many colors.
pub fn chromatic_number(graph: &WeightedGraph) -> (u32, Vec<u32>) {
    let n = graph.vertex_count();
    for k in 1..=n {
        if let Some(witness) = try_color(graph, k) {
            return (k, witness);
        }
    }
    unreachable!("n colors always suffice for n vertices")
}

/// True iff the graph admits a proper coloring with at most `k` colors.
pub fn decide_gcp(graph: &WeightedGraph, k: u32) -> bool {
    if k == 0 {
        return false;
    }
    if k >= graph.vertex_count() {
        return true;
    }
    try_color(graph, k).is_some()
}

/// Capacity-indexed dynamic program; returns one optimal selection (ascending
/// item indices) and the optimal total value.
pub fn solve_ksp(items: &[crate::domain::Item], capacity: u64) -> (Vec<usize>, u64) {
    let total_weight: u64 = items.iter().map(|it| it.weight).sum();
    let cap = capacity.min(total_weight) as usize;
    let n = items.len();
    let mut dp = vec![vec![0u64; cap + 1]; n + 1];
    for i in 1..=n {
        let w = items[i - 1].weight as usize;
        let v = items[i - 1].value;
        for c in 0..=cap {
            dp[i][c] = dp[i - 1][c];
            if w <= c {
                dp[i][c] = dp[i][c].max(dp[i - 1][c - w] + v);
            }
        }
    }
    let mut selection = Vec::new();
    let mut c = cap;
    for i in (1..=n).rev() {
        if dp[i][c] != dp[i - 1][c] {
            selection.push(i - 1);
            c -= items[i - 1].weight as usize;
        }
    }
    selection.reverse();
    (selection, dp[n][cap])
}

/// Assigns each meeting to a distinct slot maximizing total attendances,
/// where a participant attends a meeting iff its slot is in their
/// availability set. Exact choose-or-skip search over slots.
pub fn solve_msp(
    availability: &[BTreeSet<u32>],
    slots: u32,
    meetings: u32,
) -> Result<(Vec<u32>, u64), OracleError> {
    let m = slots as usize;
    let k = meetings as usize;
    if k > m {
        return Err(OracleError::Infeasible(format!(
            "{meetings} meetings cannot fit in {slots} slots"
        )));
    }
    let counts: Vec<u64> = (1..=slots)
        .map(|s| availability.iter().filter(|a| a.contains(&s)).count() as u64)
        .collect();

    // best[j][c]: best total choosing c slots from slots j.. (None = impossible)
    let mut best = vec![vec![None::<u64>; k + 1]; m + 1];
    best[m][0] = Some(0);
    for j in (0..m).rev() {
        for c in 0..=k {
            let skip = best[j + 1][c];
            let take = if c > 0 {
                best[j + 1][c - 1].map(|v| v + counts[j])
            } else {
                None
            };
            best[j][c] = match (skip, take) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
        }
    }

    let participation = best[0][k].expect("k <= m makes a full assignment possible");
    let mut chosen = Vec::with_capacity(k);
    let mut c = k;
    let mut j = 0;
    while c > 0 {
        let take = best[j + 1][c - 1].map(|v| v + counts[j]);
        if take == best[j][c] {
            chosen.push(j as u32 + 1);
            c -= 1;
        }
        j += 1;
    }
    Ok((chosen, participation))
}

/// Solves any instance with the task-appropriate exact method.
pub fn solve(instance: &ProblemInstance) -> Result<OracleSolution, OracleError> {
    match &instance.payload {
        Payload::Sas { array, target } => {
            Ok(OracleSolution::Sas { index: solve_sas(array, *target)? })
        }
        Payload::Edp { string_a, string_b } => {
            Ok(OracleSolution::Edp { distance: solve_edp(string_a, string_b) })
        }
        Payload::Spp { graph } => {
            let (path, total_weight) = solve_spp(graph)?;
            Ok(OracleSolution::Spp { path, total_weight })
        }
        Payload::TspD { graph, threshold, .. } => {
            Ok(OracleSolution::TspD { feasible: decide_tsp(graph, *threshold)? })
        }
        Payload::GcpD { graph, colors, .. } => {
            Ok(OracleSolution::GcpD { colorable: decide_gcp(graph, *colors) })
        }
        Payload::Ksp { items, capacity } => {
            let (selection, value) = solve_ksp(items, *capacity);
            Ok(OracleSolution::Ksp { selection, value })
        }
        Payload::Tsp { graph } => {
            let (tour, cost) = solve_tsp(graph)?;
            Ok(OracleSolution::Tsp { tour, cost })
        }
        Payload::Gcp { graph, .. } => {
            let (chromatic, coloring) = chromatic_number(graph);
            Ok(OracleSolution::Gcp { chromatic_number: chromatic, coloring })
        }
        Payload::Msp { availability, slots, meetings } => {
            let (assignment, participation) = solve_msp(availability, *slots, *meetings)?;
            Ok(OracleSolution::Msp { assignment, participation })
        }
    }
}
