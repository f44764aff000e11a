//! Oracle correctness against exhaustive brute force on small instances,
//! at least 500 seeded random instances per task.

mod common;

use combench::oracles;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROUNDS: usize = 500;

#[test]
fn search_index_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for round in 0..1000 {
        let len = rng.random_range(1..=60usize);
        let mut array: Vec<i64> = rand::seq::index::sample(&mut rng, len * 4, len)
            .into_iter()
            .map(|v| v as i64)
            .collect();
        array.sort_unstable();
        let target = array[rng.random_range(0..len)];
        let found = oracles::solve_sas(&array, target).expect("target present");
        assert_eq!(Some(found), common::brute_sas(&array, target), "round {round}");
    }
}

#[test]
fn edit_distance_matches_exponential_recursion() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for round in 0..ROUNDS {
        let a = common::random_word(&mut rng, 8);
        let b = common::random_word(&mut rng, 8);
        let fast = oracles::solve_edp(&a, &b);
        let slow = common::brute_edp(a.as_bytes(), b.as_bytes());
        assert_eq!(fast, slow, "round {round}: {a:?} vs {b:?}");
    }
}

#[test]
fn edit_distance_symmetry_and_triangle_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..ROUNDS {
        let a = common::random_word(&mut rng, 10);
        let b = common::random_word(&mut rng, 10);
        let c = common::random_word(&mut rng, 10);
        assert_eq!(oracles::solve_edp(&a, &b), oracles::solve_edp(&b, &a));
        assert!(
            oracles::solve_edp(&a, &c)
                <= oracles::solve_edp(&a, &b) + oracles::solve_edp(&b, &c)
        );
    }
}

#[test]
fn shortest_path_matches_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for round in 0..ROUNDS {
        let graph = common::random_graph(&mut rng, 8, true);
        let (path, weight) = oracles::solve_spp(&graph).expect("connected");
        assert_eq!(Some(weight), common::brute_spp(&graph), "round {round}");
        // The returned witness must be a real path of the claimed weight.
        assert_eq!(path.first(), Some(&1));
        assert_eq!(path.last(), Some(&graph.vertex_count()));
        let walked: u64 = path
            .windows(2)
            .map(|p| graph.weight_between(p[0], p[1]).expect("edge exists") as u64)
            .sum();
        assert_eq!(walked, weight);
    }
}

#[test]
fn tour_cost_matches_permutation_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for round in 0..ROUNDS {
        let graph = common::random_complete_graph(&mut rng, 2, 8);
        let (tour, cost) = oracles::solve_tsp(&graph).expect("complete");
        assert_eq!(cost, common::brute_tsp(&graph), "round {round}");
        let n = graph.vertex_count();
        assert_eq!(tour.len() as u32, n);
        let mut sorted = tour.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (1..=n).collect::<Vec<_>>());
        let mut walked = 0u64;
        for i in 0..tour.len() {
            let a = tour[i];
            let b = tour[(i + 1) % tour.len()];
            walked += graph.weight_between(a, b).expect("edge exists") as u64;
        }
        assert_eq!(walked, cost);
    }
}

#[test]
fn tour_decision_matches_brute_force_and_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for _ in 0..ROUNDS {
        let graph = common::random_complete_graph(&mut rng, 2, 7);
        let optimum = common::brute_tsp(&graph);
        for threshold in [optimum.saturating_sub(1), optimum, optimum + 1] {
            assert_eq!(
                oracles::decide_tsp(&graph, threshold).unwrap(),
                optimum <= threshold
            );
        }
        if oracles::decide_tsp(&graph, optimum).unwrap() {
            assert!(oracles::decide_tsp(&graph, optimum + 1).unwrap());
        }
    }
}

#[test]
fn chromatic_number_matches_exhaustive_coloring() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for round in 0..ROUNDS {
        let graph = common::random_graph(&mut rng, 7, false);
        let (chi, witness) = oracles::chromatic_number(&graph);
        assert_eq!(chi, common::brute_chromatic(&graph), "round {round}");
        for e in graph.edges() {
            assert_ne!(witness[e.u as usize - 1], witness[e.v as usize - 1]);
        }
        let distinct: std::collections::BTreeSet<_> = witness.iter().collect();
        assert_eq!(distinct.len() as u32, chi);
    }
}

#[test]
fn coloring_decision_matches_exhaustive_and_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    for _ in 0..ROUNDS {
        let graph = common::random_graph(&mut rng, 7, false);
        let k = rng.random_range(1..=graph.vertex_count());
        assert_eq!(oracles::decide_gcp(&graph, k), common::brute_colorable(&graph, k));
        if oracles::decide_gcp(&graph, k) {
            assert!(oracles::decide_gcp(&graph, k + 1));
        }
    }
}

#[test]
fn knapsack_value_matches_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    for round in 0..ROUNDS {
        let (items, capacity) = common::random_items(&mut rng, 15);
        let (selection, value) = oracles::solve_ksp(&items, capacity);
        assert_eq!(value, common::brute_ksp(&items, capacity), "round {round}");
        let weight: u64 = selection.iter().map(|&i| items[i].weight).sum();
        let selected_value: u64 = selection.iter().map(|&i| items[i].value).sum();
        assert!(weight <= capacity);
        assert_eq!(selected_value, value);
    }
}

#[test]
fn schedule_participation_matches_assignment_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    for round in 0..ROUNDS {
        let (availability, slots) = common::random_availability(&mut rng, 6, 6);
        let meetings = rng.random_range(1..=slots.min(4));
        let (assignment, participation) =
            oracles::solve_msp(&availability, slots, meetings).expect("feasible");
        assert_eq!(
            participation,
            common::brute_msp(&availability, slots, meetings),
            "round {round}"
        );
        assert_eq!(assignment.len() as u32, meetings);
        let distinct: std::collections::BTreeSet<_> = assignment.iter().collect();
        assert_eq!(distinct.len(), assignment.len());
        let recomputed: u64 = assignment
            .iter()
            .map(|&s| availability.iter().filter(|a| a.contains(&s)).count() as u64)
            .sum();
        assert_eq!(recomputed, participation);
    }
}

#[test]
fn held_karp_handles_the_largest_ladder_size() {
    // Top-of-ladder sanity: a 13-city tour stays exact and fast.
    let graph = {
        let mut rng = ChaCha8Rng::seed_from_u64(111);
        common::random_complete_graph(&mut rng, 13, 13)
    };
    let (tour, cost) = oracles::solve_tsp(&graph).expect("complete");
    assert_eq!(tour.len(), 13);
    let mut walked = 0u64;
    for i in 0..tour.len() {
        walked += graph
            .weight_between(tour[i], tour[(i + 1) % tour.len()])
            .expect("edge") as u64;
    }
    assert_eq!(walked, cost);
}
