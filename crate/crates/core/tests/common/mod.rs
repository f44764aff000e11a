//! Brute-force reference solvers and instance helpers shared by the
//! integration suites. These enumerate exhaustively and stay independent of
//! the dynamic-programming and backtracking paths they are used to check.

#![allow(dead_code)]

use std::collections::BTreeSet;

use combench::domain::{Item, WeightedGraph};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn brute_sas(array: &[i64], target: i64) -> Option<usize> {
    array.iter().position(|&v| v == target)
}

pub fn brute_edp(a: &[u8], b: &[u8]) -> u64 {
    if a.is_empty() {
        return b.len() as u64;
    }
    if b.is_empty() {
        return a.len() as u64;
    }
    if a[0] == b[0] {
        return brute_edp(&a[1..], &b[1..]);
    }
    let delete = brute_edp(&a[1..], b);
    let insert = brute_edp(a, &b[1..]);
    let substitute = brute_edp(&a[1..], &b[1..]);
    1 + delete.min(insert).min(substitute)
}

/// Minimum total weight over every simple path from vertex 1 to vertex n.
pub fn brute_spp(graph: &WeightedGraph) -> Option<u64> {
    let n = graph.vertex_count();
    if n == 1 {
        return Some(0);
    }
    let adj = graph.adjacency();
    let mut visited = vec![false; n as usize + 1];
    let mut best = None;
    fn dfs(
        u: u32,
        n: u32,
        acc: u64,
        adj: &[Vec<(u32, u32)>],
        visited: &mut [bool],
        best: &mut Option<u64>,
    ) {
        if u == n {
            *best = Some(best.map_or(acc, |b: u64| b.min(acc)));
            return;
        }
        visited[u as usize] = true;
        for &(v, w) in &adj[u as usize] {
            if !visited[v as usize] {
                dfs(v, n, acc + w as u64, adj, visited, best);
            }
        }
        visited[u as usize] = false;
    }
    dfs(1, n, 0, &adj, &mut visited, &mut best);
    best
}

/// Minimum tour cost by enumerating every permutation of cities 2..=n.
pub fn brute_tsp(graph: &WeightedGraph) -> u64 {
    let n = graph.vertex_count();
    let d = graph.distance_matrix().expect("complete graph");
    let mut rest: Vec<u32> = (2..=n).collect();
    let mut best = u64::MAX;
    fn permute(rest: &mut Vec<u32>, k: usize, d: &[Vec<u64>], best: &mut u64) {
        if k == rest.len() {
            let mut cost = d[1][rest[0] as usize];
            for pair in rest.windows(2) {
                cost += d[pair[0] as usize][pair[1] as usize];
            }
            cost += d[rest[rest.len() - 1] as usize][1];
            *best = (*best).min(cost);
            return;
        }
        for i in k..rest.len() {
            rest.swap(k, i);
            permute(rest, k + 1, d, best);
            rest.swap(k, i);
        }
    }
    if rest.is_empty() {
        return 0;
    }
    permute(&mut rest, 0, &d, &mut best);
    best
}

/// Proper-coloring check over every one of the k^n assignments.
pub fn brute_colorable(graph: &WeightedGraph, k: u32) -> bool {
    let n = graph.vertex_count() as usize;
    let mut assignment = vec![0u32; n];
    loop {
        if graph
            .edges()
            .iter()
            .all(|e| assignment[e.u as usize - 1] != assignment[e.v as usize - 1])
        {
            return true;
        }
        // Odometer increment in base k.
        let mut i = 0;
        loop {
            if i == n {
                return false;
            }
            assignment[i] += 1;
            if assignment[i] < k {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
    }
}

pub fn brute_chromatic(graph: &WeightedGraph) -> u32 {
    for k in 1..=graph.vertex_count() {
        if brute_colorable(graph, k) {
            return k;
        }
    }
    unreachable!("n colors always suffice")
}

/// Maximum value over all 2^n subsets within the capacity.
pub fn brute_ksp(items: &[Item], capacity: u64) -> u64 {
    let n = items.len();
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        let mut weight = 0;
        let mut value = 0;
        for (i, item) in items.iter().enumerate() {
            if mask & (1 << i) != 0 {
                weight += item.weight;
                value += item.value;
            }
        }
        if weight <= capacity && value > best {
            best = value;
        }
    }
    best
}

/// Maximum participation over every injective meetings-to-slots assignment.
pub fn brute_msp(availability: &[BTreeSet<u32>], slots: u32, meetings: u32) -> u64 {
    let counts: Vec<u64> = (1..=slots)
        .map(|s| availability.iter().filter(|a| a.contains(&s)).count() as u64)
        .collect();
    let mut used = vec![false; slots as usize];
    fn assign(meeting: u32, meetings: u32, counts: &[u64], used: &mut [bool], acc: u64) -> u64 {
        if meeting == meetings {
            return acc;
        }
        let mut best = 0;
        for s in 0..counts.len() {
            if !used[s] {
                used[s] = true;
                best = best.max(assign(meeting + 1, meetings, counts, used, acc + counts[s]));
                used[s] = false;
            }
        }
        best
    }
    assign(0, meetings, &counts, &mut used, 0)
}

/// Exact two-sided signed-rank p-value by explicit enumeration of all 2^m
/// sign assignments (test oracle for the production implementation).
pub fn enumerate_wilcoxon_p(ranks: &[f64], w_plus: f64) -> f64 {
    let m = ranks.len();
    let total = 1u64 << m;
    let mut le = 0u64;
    let mut ge = 0u64;
    for mask in 0..total {
        let t: f64 = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        if t <= w_plus {
            le += 1;
        }
        if t >= w_plus {
            ge += 1;
        }
    }
    (2.0 * (le.min(ge) as f64) / total as f64).min(1.0)
}

// ---------------------------------------------------------------------------
// Random instance helpers
// ---------------------------------------------------------------------------

pub fn random_graph(rng: &mut ChaCha8Rng, max_n: u32, connected: bool) -> WeightedGraph {
    let min_n = if connected { 2 } else { 1 };
    let n = rng.random_range(min_n..=max_n);
    let max_m = n * (n - 1) / 2;
    let min_m = if connected { n - 1 } else { 0 };
    let m = rng.random_range(min_m..=max_m);
    combench::synth::synth_graph(n, m, (0, 9), connected, rng.random())
        .expect("valid parameters")
}

pub fn random_complete_graph(rng: &mut ChaCha8Rng, min_n: u32, max_n: u32) -> WeightedGraph {
    let n = rng.random_range(min_n..=max_n);
    combench::synth::synth_graph(n, n * (n - 1) / 2, (0, 9), false, rng.random())
        .expect("valid parameters")
}

pub fn random_word(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| (b'a' + rng.random_range(0..26u8)) as char).collect()
}

pub fn random_items(rng: &mut ChaCha8Rng, max_n: usize) -> (Vec<Item>, u64) {
    let n = rng.random_range(1..=max_n);
    let items: Vec<Item> = (0..n)
        .map(|_| Item {
            weight: rng.random_range(1..=20),
            value: rng.random_range(1..=20),
        })
        .collect();
    let total: u64 = items.iter().map(|it| it.weight).sum();
    let capacity = rng.random_range(1..=total);
    (items, capacity)
}

pub fn random_availability(
    rng: &mut ChaCha8Rng,
    max_participants: usize,
    max_slots: u32,
) -> (Vec<BTreeSet<u32>>, u32) {
    let slots = rng.random_range(1..=max_slots);
    let participants = rng.random_range(1..=max_participants);
    let availability = (0..participants)
        .map(|_| {
            (1..=slots)
                .filter(|_| rng.random_bool(0.5))
                .collect::<BTreeSet<u32>>()
        })
        .collect();
    (availability, slots)
}
