//! Judges a parsed model answer against an instance: exact answers where the
//! answer is unique, feasibility plus objective equality otherwise.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::{
    AnswerClaim, OracleSolution, ParsedAnswer, Payload, ProblemInstance, WeightedGraph,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Correct,
    Incorrect,
    /// No parseable answer existed; produced by the harness, never by
    /// [`verify`] itself.
    ParseFailure,
}

/// Outcome of judging one answer. `detail` names the rule that decided;
/// `quality` carries secondary metrics such as colors used or tour cost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationOutcome {
    pub status: Status,
    pub detail: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub quality: BTreeMap<String, i64>,
}

impl VerificationOutcome {
    pub fn parse_failure(detail: impl Into<String>) -> Self {
        VerificationOutcome {
            status: Status::ParseFailure,
            detail: detail.into(),
            quality: BTreeMap::new(),
        }
    }

    fn correct(detail: impl Into<String>) -> Self {
        VerificationOutcome {
            status: Status::Correct,
            detail: detail.into(),
            quality: BTreeMap::new(),
        }
    }

    fn incorrect(detail: impl Into<String>) -> Self {
        VerificationOutcome {
            status: Status::Incorrect,
            detail: detail.into(),
            quality: BTreeMap::new(),
        }
    }

    fn with_quality(mut self, key: &str, value: i64) -> Self {
        self.quality.insert(key.to_string(), value);
        self
    }
}

/// Judges `answer` against `instance` using the precomputed `oracle`
/// solution. A shape mismatch is reported as Incorrect, never a crash.
pub fn verify(
    instance: &ProblemInstance,
    answer: &ParsedAnswer,
    oracle: &OracleSolution,
) -> VerificationOutcome {
    if answer.claim.task() != instance.task {
        return VerificationOutcome::incorrect(format!(
            "answer shape mismatch: expected a {} answer",
            instance.task
        ));
    }
    match (&instance.payload, &answer.claim, oracle) {
        (Payload::Sas { .. }, AnswerClaim::Sas { index }, OracleSolution::Sas { index: want }) => {
            if *index == *want as i64 {
                VerificationOutcome::correct("index matches the unique occurrence")
            } else {
                VerificationOutcome::incorrect(format!(
                    "claimed index {index}, target is at {want}"
                ))
            }
        }
        (
            Payload::Edp { .. },
            AnswerClaim::Edp { operations },
            OracleSolution::Edp { distance },
        ) => {
            if *operations == *distance as i64 {
                VerificationOutcome::correct("operation count equals the minimum")
            } else {
                VerificationOutcome::incorrect(format!(
                    "claimed {operations} operations, minimum is {distance}"
                ))
            }
        }
        (
            Payload::Spp { graph },
            AnswerClaim::Spp { path },
            OracleSolution::Spp { total_weight, .. },
        ) => verify_path(graph, path, *total_weight),
        (
            Payload::TspD { .. },
            AnswerClaim::TspD { feasible },
            OracleSolution::TspD { feasible: want },
        ) => verify_decision(*feasible, *want),
        (
            Payload::GcpD { .. },
            AnswerClaim::GcpD { feasible },
            OracleSolution::GcpD { colorable: want },
        ) => verify_decision(*feasible, *want),
        (
            Payload::Ksp { items, capacity },
            AnswerClaim::Ksp { selection },
            OracleSolution::Ksp { value, .. },
        ) => verify_selection(items, *capacity, selection, *value),
        (Payload::Tsp { graph }, AnswerClaim::Tsp { tour }, OracleSolution::Tsp { cost, .. }) => {
            verify_tour(graph, tour, *cost)
        }
        (
            Payload::Gcp { graph, color_budget },
            AnswerClaim::Gcp { coloring },
            OracleSolution::Gcp { chromatic_number, .. },
        ) => verify_coloring(graph, *color_budget, coloring, *chromatic_number),
        (
            Payload::Msp { availability, slots, meetings },
            AnswerClaim::Msp { assignment },
            OracleSolution::Msp { participation, .. },
        ) => verify_schedule(availability, *slots, *meetings, assignment, *participation),
        _ => VerificationOutcome::incorrect("oracle solution does not match the task"),
    }
}

fn verify_decision(claimed: bool, want: bool) -> VerificationOutcome {
    if claimed == want {
        VerificationOutcome::correct("decision matches the oracle")
    } else {
        VerificationOutcome::incorrect(format!("claimed {claimed}, oracle says {want}"))
    }
}

fn verify_path(graph: &WeightedGraph, path: &[i64], optimum: u64) -> VerificationOutcome {
    let n = graph.vertex_count() as i64;
    if path.is_empty() {
        return VerificationOutcome::incorrect("empty path");
    }
    if path[0] != 1 {
        return VerificationOutcome::incorrect(format!("path starts at {}, not 1", path[0]));
    }
    if *path.last().expect("non-empty") != n {
        return VerificationOutcome::incorrect(format!(
            "path ends at {}, not {n}",
            path.last().expect("non-empty")
        ));
    }
    if let Some(bad) = path.iter().find(|&&v| v < 1 || v > n) {
        return VerificationOutcome::incorrect(format!("vertex {bad} is not in the graph"));
    }
    let mut seen = BTreeSet::new();
    if let Some(repeat) = path.iter().find(|&&v| !seen.insert(v)) {
        return VerificationOutcome::incorrect(format!("vertex {repeat} repeats in the path"));
    }
    let mut weight = 0u64;
    for pair in path.windows(2) {
        match graph.weight_between(pair[0] as u32, pair[1] as u32) {
            Some(w) => weight += w as u64,
            None => {
                return VerificationOutcome::incorrect(format!(
                    "no edge between {} and {}",
                    pair[0], pair[1]
                ))
            }
        }
    }
    if weight == optimum {
        VerificationOutcome::correct(format!("optimal path of weight {weight}"))
            .with_quality("path_weight", weight as i64)
    } else {
        VerificationOutcome::incorrect(format!(
            "path weight {weight} is not the optimum {optimum}"
        ))
        .with_quality("path_weight", weight as i64)
    }
}

fn verify_tour(graph: &WeightedGraph, tour: &[i64], optimum: u64) -> VerificationOutcome {
    let n = graph.vertex_count() as i64;
    if tour.len() as i64 != n {
        return VerificationOutcome::incorrect(format!(
            "tour visits {} cities, expected {n}",
            tour.len()
        ));
    }
    if let Some(bad) = tour.iter().find(|&&v| v < 1 || v > n) {
        return VerificationOutcome::incorrect(format!("city {bad} is not in the graph"));
    }
    let mut seen = BTreeSet::new();
    if let Some(repeat) = tour.iter().find(|&&v| !seen.insert(v)) {
        return VerificationOutcome::incorrect(format!("city {repeat} repeats in the tour"));
    }
    // Any rotation or direction is acceptable; the cost is invariant.
    let mut cost = 0u64;
    for i in 0..tour.len() {
        let a = tour[i] as u32;
        let b = tour[(i + 1) % tour.len()] as u32;
        match graph.weight_between(a, b) {
            Some(w) => cost += w as u64,
            None => {
                return VerificationOutcome::incorrect(format!("no edge between {a} and {b}"))
            }
        }
    }
    if cost == optimum {
        VerificationOutcome::correct(format!("optimal tour of cost {cost}"))
            .with_quality("tour_cost", cost as i64)
    } else {
        VerificationOutcome::incorrect(format!("tour cost {cost} is not the optimum {optimum}"))
            .with_quality("tour_cost", cost as i64)
    }
}

fn verify_selection(
    items: &[crate::domain::Item],
    capacity: u64,
    selection: &[i64],
    optimum: u64,
) -> VerificationOutcome {
    let count = items.len() as i64;
    if let Some(bad) = selection.iter().find(|&&i| i < 0 || i >= count) {
        return VerificationOutcome::incorrect(format!("item id {bad} is out of range"));
    }
    let mut seen = BTreeSet::new();
    if let Some(repeat) = selection.iter().find(|&&i| !seen.insert(i)) {
        return VerificationOutcome::incorrect(format!("item {repeat} selected twice"));
    }
    let weight: u64 = selection.iter().map(|&i| items[i as usize].weight).sum();
    let value: u64 = selection.iter().map(|&i| items[i as usize].value).sum();
    if weight > capacity {
        return VerificationOutcome::incorrect(format!(
            "selection weighs {weight}, capacity is {capacity}"
        ))
        .with_quality("total_value", value as i64);
    }
    if value == optimum {
        VerificationOutcome::correct(format!("optimal selection of value {value}"))
            .with_quality("total_value", value as i64)
    } else {
        VerificationOutcome::incorrect(format!(
            "selection value {value} is not the optimum {optimum}"
        ))
        .with_quality("total_value", value as i64)
    }
}

fn verify_coloring(
    graph: &WeightedGraph,
    budget: u32,
    coloring: &BTreeMap<i64, String>,
    chromatic_number: u32,
) -> VerificationOutcome {
    let n = graph.vertex_count() as i64;
    // Color usage is reported on every outcome, pass or fail.
    let colors_used = coloring.values().collect::<BTreeSet<_>>().len() as u32;
    let quality = |outcome: VerificationOutcome| {
        outcome
            .with_quality("colors_used", colors_used as i64)
            .with_quality("equals_chromatic", i64::from(colors_used == chromatic_number))
    };
    if let Some(bad) = coloring.keys().find(|&&v| v < 1 || v > n) {
        return quality(VerificationOutcome::incorrect(format!(
            "vertex {bad} is not in the graph"
        )));
    }
    for v in 1..=n {
        if !coloring.contains_key(&v) {
            return quality(VerificationOutcome::incorrect(format!("vertex {v} has no color")));
        }
    }
    if colors_used > budget {
        return quality(VerificationOutcome::incorrect(format!(
            "uses {colors_used} colors, budget is {budget}"
        )));
    }
    for e in graph.edges() {
        if coloring[&(e.u as i64)] == coloring[&(e.v as i64)] {
            return quality(VerificationOutcome::incorrect(format!(
                "edge ({},{}) monochromatic",
                e.u, e.v
            )));
        }
    }
    quality(VerificationOutcome::correct(format!(
        "proper coloring with {colors_used} colors within budget {budget}"
    )))
}

fn verify_schedule(
    availability: &[BTreeSet<u32>],
    slots: u32,
    meetings: u32,
    assignment: &BTreeMap<i64, i64>,
    optimum: u64,
) -> VerificationOutcome {
    for m in 1..=meetings as i64 {
        if !assignment.contains_key(&m) {
            return VerificationOutcome::incorrect(format!("meeting {m} has no slot"));
        }
    }
    if let Some(bad) = assignment.keys().find(|&&m| m < 1 || m > meetings as i64) {
        return VerificationOutcome::incorrect(format!("meeting {bad} does not exist"));
    }
    if let Some(bad) = assignment.values().find(|&&s| s < 1 || s > slots as i64) {
        return VerificationOutcome::incorrect(format!("slot {bad} does not exist"));
    }
    let mut used = BTreeSet::new();
    if let Some(clash) = assignment.values().find(|&&s| !used.insert(s)) {
        return VerificationOutcome::incorrect(format!("slot {clash} hosts two meetings"));
    }
    let participation: u64 = assignment
        .values()
        .map(|&s| availability.iter().filter(|a| a.contains(&(s as u32))).count() as u64)
        .sum();
    if participation == optimum {
        VerificationOutcome::correct(format!("optimal schedule with participation {participation}"))
            .with_quality("participation", participation as i64)
    } else {
        VerificationOutcome::incorrect(format!(
            "participation {participation} is not the optimum {optimum}"
        ))
        .with_quality("participation", participation as i64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DifficultyLevel, Item, TaskId};

    fn answer(claim: AnswerClaim) -> ParsedAnswer {
        ParsedAnswer { claim, raw: String::new() }
    }

    fn edp_instance() -> ProblemInstance {
        ProblemInstance::new(
            TaskId::Edp,
            DifficultyLevel::new(1).unwrap(),
            "edp/1/0".into(),
            Payload::Edp { string_a: "cef".into(), string_b: "ccb".into() },
        )
        .unwrap()
    }

    fn coloring_instance() -> ProblemInstance {
        let graph = WeightedGraph::new(6, [(1, 6, 1), (2, 6, 1), (3, 4, 1), (3, 5, 1)]).unwrap();
        ProblemInstance::new(
            TaskId::Gcp,
            DifficultyLevel::new(1).unwrap(),
            "gcp/1/0".into(),
            Payload::Gcp { graph, color_budget: 4 },
        )
        .unwrap()
    }

    fn coloring_claim(pairs: &[(i64, &str)]) -> AnswerClaim {
        AnswerClaim::Gcp {
            coloring: pairs.iter().map(|(v, c)| (*v, c.to_string())).collect(),
        }
    }

    #[test]
    fn edit_distance_exact_match_rule() {
        let inst = edp_instance();
        let oracle = OracleSolution::Edp { distance: 2 };
        let ok = verify(&inst, &answer(AnswerClaim::Edp { operations: 2 }), &oracle);
        assert_eq!(ok.status, Status::Correct);
        let bad = verify(&inst, &answer(AnswerClaim::Edp { operations: 3 }), &oracle);
        assert_eq!(bad.status, Status::Incorrect);
    }

    #[test]
    fn monochromatic_edge_is_reported_first() {
        let inst = coloring_instance();
        let oracle = OracleSolution::Gcp { chromatic_number: 2, coloring: vec![1, 1, 1, 2, 2, 2] };
        let claim = coloring_claim(&[(1, "A"), (2, "A"), (3, "B"), (4, "B"), (5, "C"), (6, "A")]);
        let outcome = verify(&inst, &answer(claim), &oracle);
        assert_eq!(outcome.status, Status::Incorrect);
        assert_eq!(outcome.detail, "edge (1,6) monochromatic");
        assert_eq!(outcome.quality["colors_used"], 3);
    }

    #[test]
    fn budget_feasible_coloring_is_correct_even_above_chromatic() {
        let inst = coloring_instance();
        let oracle = OracleSolution::Gcp { chromatic_number: 2, coloring: vec![1, 1, 1, 2, 2, 2] };
        let claim = coloring_claim(&[(1, "A"), (2, "A"), (3, "A"), (4, "B"), (5, "B"), (6, "B")]);
        let outcome = verify(&inst, &answer(claim), &oracle);
        assert_eq!(outcome.status, Status::Correct);
        assert_eq!(outcome.quality["colors_used"], 2);
        assert_eq!(outcome.quality["equals_chromatic"], 1);

        // Three colors on a chromatic-number-2 graph still pass under budget 4.
        let three = coloring_claim(&[(1, "A"), (2, "C"), (3, "A"), (4, "B"), (5, "B"), (6, "B")]);
        let outcome = verify(&inst, &answer(three), &oracle);
        assert_eq!(outcome.status, Status::Correct);
        assert_eq!(outcome.quality["equals_chromatic"], 0);
    }

    #[test]
    fn coloring_must_cover_every_vertex_and_stay_in_budget() {
        let inst = coloring_instance();
        let oracle = OracleSolution::Gcp { chromatic_number: 2, coloring: vec![1, 1, 1, 2, 2, 2] };
        let missing = coloring_claim(&[(1, "A"), (2, "A"), (3, "B"), (4, "B"), (5, "C")]);
        let outcome = verify(&inst, &answer(missing), &oracle);
        assert_eq!(outcome.status, Status::Incorrect);
        assert!(outcome.detail.contains("vertex 6"), "{}", outcome.detail);

        let wasteful = coloring_claim(&[
            (1, "A"),
            (2, "B"),
            (3, "C"),
            (4, "D"),
            (5, "E"),
            (6, "F"),
        ]);
        let outcome = verify(&inst, &answer(wasteful), &oracle);
        assert_eq!(outcome.status, Status::Incorrect);
        assert!(outcome.detail.contains("budget"), "{}", outcome.detail);
    }

    #[test]
    fn shape_mismatch_is_incorrect_not_a_crash() {
        let inst = edp_instance();
        let oracle = OracleSolution::Edp { distance: 2 };
        let outcome = verify(&inst, &answer(AnswerClaim::Sas { index: 2 }), &oracle);
        assert_eq!(outcome.status, Status::Incorrect);
        assert!(outcome.detail.contains("shape"), "{}", outcome.detail);
    }

    #[test]
    fn path_rules_reject_gaps_detours_and_repeats() {
        let graph =
            WeightedGraph::new(4, [(1, 2, 1), (2, 3, 1), (3, 4, 1), (1, 4, 5)]).unwrap();
        let inst = ProblemInstance::new(
            TaskId::Spp,
            DifficultyLevel::new(1).unwrap(),
            "spp/1/0".into(),
            Payload::Spp { graph },
        )
        .unwrap();
        let oracle = OracleSolution::Spp { path: vec![1, 2, 3, 4], total_weight: 3 };

        let ok = verify(&inst, &answer(AnswerClaim::Spp { path: vec![1, 2, 3, 4] }), &oracle);
        assert_eq!(ok.status, Status::Correct);

        let heavy = verify(&inst, &answer(AnswerClaim::Spp { path: vec![1, 4] }), &oracle);
        assert_eq!(heavy.status, Status::Incorrect);

        let gap = verify(&inst, &answer(AnswerClaim::Spp { path: vec![1, 3, 4] }), &oracle);
        assert!(gap.detail.contains("no edge"), "{}", gap.detail);

        let repeat = verify(
            &inst,
            &answer(AnswerClaim::Spp { path: vec![1, 2, 1, 2, 3, 4] }),
            &oracle,
        );
        assert!(repeat.detail.contains("repeats"), "{}", repeat.detail);
    }

    #[test]
    fn tour_accepts_any_rotation_and_direction() {
        let graph = WeightedGraph::new(4, [
            (1, 2, 1),
            (2, 3, 2),
            (3, 4, 3),
            (1, 4, 4),
            (1, 3, 9),
            (2, 4, 9),
        ])
        .unwrap();
        let inst = ProblemInstance::new(
            TaskId::Tsp,
            DifficultyLevel::new(1).unwrap(),
            "tsp/1/0".into(),
            Payload::Tsp { graph },
        )
        .unwrap();
        let oracle = OracleSolution::Tsp { tour: vec![1, 2, 3, 4], cost: 10 };
        for tour in [vec![1, 2, 3, 4], vec![3, 4, 1, 2], vec![4, 3, 2, 1]] {
            let outcome = verify(&inst, &answer(AnswerClaim::Tsp { tour }), &oracle);
            assert_eq!(outcome.status, Status::Correct, "{}", outcome.detail);
        }
        let detour = verify(&inst, &answer(AnswerClaim::Tsp { tour: vec![1, 3, 2, 4] }), &oracle);
        assert_eq!(detour.status, Status::Incorrect);
    }

    #[test]
    fn selection_must_fit_capacity_and_hit_optimum() {
        let items = vec![
            Item { weight: 3, value: 5 },
            Item { weight: 4, value: 6 },
            Item { weight: 5, value: 2 },
        ];
        let inst = ProblemInstance::new(
            TaskId::Ksp,
            DifficultyLevel::new(1).unwrap(),
            "ksp/1/0".into(),
            Payload::Ksp { items, capacity: 7 },
        )
        .unwrap();
        let oracle = OracleSolution::Ksp { selection: vec![0, 1], value: 11 };

        let ok = verify(&inst, &answer(AnswerClaim::Ksp { selection: vec![0, 1] }), &oracle);
        assert_eq!(ok.status, Status::Correct);

        let over = verify(&inst, &answer(AnswerClaim::Ksp { selection: vec![0, 1, 2] }), &oracle);
        assert!(over.detail.contains("capacity"), "{}", over.detail);

        let weak = verify(&inst, &answer(AnswerClaim::Ksp { selection: vec![1] }), &oracle);
        assert_eq!(weak.status, Status::Incorrect);
    }

    #[test]
    fn schedule_rules_reject_slot_clashes() {
        let availability = vec![BTreeSet::from([1, 2]), BTreeSet::from([2, 3])];
        let inst = ProblemInstance::new(
            TaskId::Msp,
            DifficultyLevel::new(1).unwrap(),
            "msp/1/0".into(),
            Payload::Msp { availability, slots: 3, meetings: 2 },
        )
        .unwrap();
        let oracle = OracleSolution::Msp { assignment: vec![1, 2], participation: 3 };

        let ok = verify(
            &inst,
            &answer(AnswerClaim::Msp { assignment: BTreeMap::from([(1, 1), (2, 2)]) }),
            &oracle,
        );
        assert_eq!(ok.status, Status::Correct, "{}", ok.detail);

        let clash = verify(
            &inst,
            &answer(AnswerClaim::Msp { assignment: BTreeMap::from([(1, 2), (2, 2)]) }),
            &oracle,
        );
        assert!(clash.detail.contains("hosts two"), "{}", clash.detail);
    }
}
