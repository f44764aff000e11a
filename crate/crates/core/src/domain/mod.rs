//! Shared domain vocabulary: tasks, complexity classes, instances, answers,
//! and their canonical serialized forms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod codec;

/// Highest level of the standard difficulty ladder.
pub const STANDARD_MAX_LEVEL: u8 = 10;
/// Highest level the extended ladders support.
pub const EXTENDED_MAX_LEVEL: u8 = 20;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("{0}")]
    Invariant(String),
}

/// The nine benchmark tasks, three per complexity class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskId {
    /// Sorted array search.
    Sas,
    /// Edit distance between two strings.
    Edp,
    /// Shortest path from the first to the last vertex.
    Spp,
    /// Traveling salesman, decision version (tour within threshold?).
    TspD,
    /// Graph coloring, decision version (colorable with k colors?).
    GcpD,
    /// 0/1 knapsack.
    Ksp,
    /// Traveling salesman, optimization version.
    Tsp,
    /// Graph coloring, optimization version (chromatic number).
    Gcp,
    /// Meeting scheduling over participant availability.
    Msp,
}

impl TaskId {
    /// Canonical iteration order used everywhere instances are enumerated.
    pub const ALL: [TaskId; 9] = [
        TaskId::Sas,
        TaskId::Edp,
        TaskId::Spp,
        TaskId::TspD,
        TaskId::GcpD,
        TaskId::Ksp,
        TaskId::Tsp,
        TaskId::Gcp,
        TaskId::Msp,
    ];

    pub fn complexity_class(self) -> ComplexityClass {
        match self {
            TaskId::Sas | TaskId::Edp | TaskId::Spp => ComplexityClass::P,
            TaskId::TspD | TaskId::GcpD | TaskId::Ksp => ComplexityClass::NpComplete,
            TaskId::Tsp | TaskId::Gcp | TaskId::Msp => ComplexityClass::NpHard,
        }
    }

    /// Tasks whose payloads serialize as JSON records rather than CSV rows.
    pub fn is_linear(self) -> bool {
        matches!(self, TaskId::Sas | TaskId::Edp | TaskId::Ksp | TaskId::Msp)
    }

    pub fn is_graph(self) -> bool {
        !self.is_linear()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Sas => "sas",
            TaskId::Edp => "edp",
            TaskId::Spp => "spp",
            TaskId::TspD => "tsp_d",
            TaskId::GcpD => "gcp_d",
            TaskId::Ksp => "ksp",
            TaskId::Tsp => "tsp",
            TaskId::Gcp => "gcp",
            TaskId::Msp => "msp",
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sas" => Ok(TaskId::Sas),
            "edp" => Ok(TaskId::Edp),
            "spp" => Ok(TaskId::Spp),
            "tsp_d" | "tsp-d" => Ok(TaskId::TspD),
            "gcp_d" | "gcp-d" => Ok(TaskId::GcpD),
            "ksp" => Ok(TaskId::Ksp),
            "tsp" => Ok(TaskId::Tsp),
            "gcp" => Ok(TaskId::Gcp),
            "msp" => Ok(TaskId::Msp),
            other => Err(DomainError::UnknownTask(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityClass {
    P,
    NpComplete,
    NpHard,
}

impl ComplexityClass {
    pub const ALL: [ComplexityClass; 3] = [
        ComplexityClass::P,
        ComplexityClass::NpComplete,
        ComplexityClass::NpHard,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComplexityClass::P => "P",
            ComplexityClass::NpComplete => "NP-complete",
            ComplexityClass::NpHard => "NP-hard",
        }
    }

    /// The three tasks belonging to this class, in canonical order.
    pub fn tasks(self) -> [TaskId; 3] {
        match self {
            ComplexityClass::P => [TaskId::Sas, TaskId::Edp, TaskId::Spp],
            ComplexityClass::NpComplete => [TaskId::TspD, TaskId::GcpD, TaskId::Ksp],
            ComplexityClass::NpHard => [TaskId::Tsp, TaskId::Gcp, TaskId::Msp],
        }
    }
}

impl fmt::Display for ComplexityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Difficulty level in `[1, 10]` for the standard ladder; extended ladders
/// reach level 20.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct DifficultyLevel(u8);

impl DifficultyLevel {
    pub fn new(level: u8) -> Result<Self, DomainError> {
        if (1..=STANDARD_MAX_LEVEL).contains(&level) {
            Ok(DifficultyLevel(level))
        } else {
            Err(DomainError::Invariant(format!(
                "difficulty level {level} outside [1, {STANDARD_MAX_LEVEL}]"
            )))
        }
    }

    /// Accepts the extended range `[1, 20]` used by robustness ladders.
    pub fn extended(level: u8) -> Result<Self, DomainError> {
        if (1..=EXTENDED_MAX_LEVEL).contains(&level) {
            Ok(DifficultyLevel(level))
        } else {
            Err(DomainError::Invariant(format!(
                "difficulty level {level} outside [1, {EXTENDED_MAX_LEVEL}]"
            )))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl fmt::Display for DifficultyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An undirected edge with a non-negative integer weight. Stored normalized
/// with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub weight: u32,
}

/// A simple undirected weighted graph with vertices labeled `1..=n`.
///
/// Edges are kept sorted by `(u, v)` with `u < v`, so equal graphs compare
/// equal and serialize identically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    vertex_count: u32,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(
        vertex_count: u32,
        edges: impl IntoIterator<Item = (u32, u32, u32)>,
    ) -> Result<Self, DomainError> {
        if vertex_count == 0 {
            return Err(DomainError::Invariant("graph needs at least one vertex".into()));
        }
        let mut normalized: Vec<Edge> = Vec::new();
        for (u, v, weight) in edges {
            if u == v {
                return Err(DomainError::Invariant(format!("self-loop at vertex {u}")));
            }
            if u == 0 || v == 0 || u > vertex_count || v > vertex_count {
                return Err(DomainError::Invariant(format!(
                    "edge ({u}, {v}) endpoint outside [1, {vertex_count}]"
                )));
            }
            let (u, v) = if u < v { (u, v) } else { (v, u) };
            normalized.push(Edge { u, v, weight });
        }
        normalized.sort_by_key(|e| (e.u, e.v));
        if normalized.windows(2).any(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(DomainError::Invariant("duplicate undirected edge".into()));
        }
        Ok(WeightedGraph { vertex_count, edges: normalized })
    }

    pub fn vertex_count(&self) -> u32 {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn max_edges(vertex_count: u32) -> u64 {
        let n = vertex_count as u64;
        n * (n - 1) / 2
    }

    pub fn weight_between(&self, u: u32, v: u32) -> Option<u32> {
        if u == v {
            return None;
        }
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        self.edges
            .binary_search_by_key(&(u, v), |e| (e.u, e.v))
            .ok()
            .map(|i| self.edges[i].weight)
    }

    /// Adjacency lists indexed by vertex label (entry 0 unused).
    pub fn adjacency(&self) -> Vec<Vec<(u32, u32)>> {
        let mut adj = vec![Vec::new(); self.vertex_count as usize + 1];
        for e in &self.edges {
            adj[e.u as usize].push((e.v, e.weight));
            adj[e.v as usize].push((e.u, e.weight));
        }
        adj
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() as u64 == Self::max_edges(self.vertex_count)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count as usize;
        if n == 1 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; n + 1];
        let mut stack = vec![1u32];
        seen[1] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    /// Distance matrix for complete graphs, indexed by 1-based labels.
    pub fn distance_matrix(&self) -> Option<Vec<Vec<u64>>> {
        if !self.is_complete() {
            return None;
        }
        let n = self.vertex_count as usize;
        let mut d = vec![vec![0u64; n + 1]; n + 1];
        for e in &self.edges {
            d[e.u as usize][e.v as usize] = e.weight as u64;
            d[e.v as usize][e.u as usize] = e.weight as u64;
        }
        Some(d)
    }
}

/// One knapsack item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub weight: u64,
    pub value: u64,
}

/// Task-specific payload of a benchmark instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Sas {
        /// Strictly increasing.
        array: Vec<i64>,
        target: i64,
    },
    Edp {
        string_a: String,
        string_b: String,
    },
    /// Source is vertex 1, sink is vertex `n`.
    Spp { graph: WeightedGraph },
    TspD {
        graph: WeightedGraph,
        threshold: u64,
        /// Whether a tour within the threshold exists; kept with the
        /// instance so decision answers can be checked without re-solving.
        ground_truth: bool,
    },
    GcpD {
        graph: WeightedGraph,
        colors: u32,
        ground_truth: bool,
    },
    Ksp {
        items: Vec<Item>,
        capacity: u64,
    },
    Tsp { graph: WeightedGraph },
    Gcp {
        graph: WeightedGraph,
        /// Number of colors the answer may use; at least the chromatic number.
        color_budget: u32,
    },
    Msp {
        /// Availability per participant: slot labels in `1..=slots`.
        availability: Vec<BTreeSet<u32>>,
        slots: u32,
        meetings: u32,
    },
}

impl Payload {
    pub fn task(&self) -> TaskId {
        match self {
            Payload::Sas { .. } => TaskId::Sas,
            Payload::Edp { .. } => TaskId::Edp,
            Payload::Spp { .. } => TaskId::Spp,
            Payload::TspD { .. } => TaskId::TspD,
            Payload::GcpD { .. } => TaskId::GcpD,
            Payload::Ksp { .. } => TaskId::Ksp,
            Payload::Tsp { .. } => TaskId::Tsp,
            Payload::Gcp { .. } => TaskId::Gcp,
            Payload::Msp { .. } => TaskId::Msp,
        }
    }
}

/// One benchmark question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    pub task: TaskId,
    pub level: DifficultyLevel,
    /// Stable identifier of the form `task/level/sequence`.
    pub instance_id: String,
    pub payload: Payload,
}

impl ProblemInstance {
    pub fn new(
        task: TaskId,
        level: DifficultyLevel,
        instance_id: String,
        payload: Payload,
    ) -> Result<Self, DomainError> {
        if payload.task() != task {
            return Err(DomainError::Invariant(format!(
                "payload variant {} does not match task {task}",
                payload.task()
            )));
        }
        match &payload {
            Payload::Sas { array, .. } => {
                if array.is_empty() {
                    return Err(DomainError::Invariant("empty search array".into()));
                }
                if array.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(DomainError::Invariant(
                        "search array must be strictly increasing".into(),
                    ));
                }
            }
            Payload::Edp { .. } | Payload::Spp { .. } => {}
            Payload::TspD { graph, .. } | Payload::Tsp { graph } => {
                if !graph.is_complete() {
                    return Err(DomainError::Invariant(
                        "tour instances require a complete graph".into(),
                    ));
                }
            }
            Payload::GcpD { colors, .. } => {
                if *colors == 0 {
                    return Err(DomainError::Invariant("color count must be at least 1".into()));
                }
            }
            Payload::Gcp { color_budget, .. } => {
                if *color_budget == 0 {
                    return Err(DomainError::Invariant("color budget must be at least 1".into()));
                }
            }
            Payload::Ksp { items, capacity } => {
                if items.is_empty() {
                    return Err(DomainError::Invariant("knapsack needs at least one item".into()));
                }
                if items.iter().any(|it| it.weight == 0 || it.value == 0) {
                    return Err(DomainError::Invariant(
                        "item weights and values must be positive".into(),
                    ));
                }
                if *capacity == 0 {
                    return Err(DomainError::Invariant("capacity must be positive".into()));
                }
            }
            Payload::Msp { availability, slots, meetings } => {
                if *slots == 0 || *meetings == 0 || availability.is_empty() {
                    return Err(DomainError::Invariant(
                        "schedule needs participants, slots, and meetings".into(),
                    ));
                }
                for (i, set) in availability.iter().enumerate() {
                    if set.iter().any(|&s| s == 0 || s > *slots) {
                        return Err(DomainError::Invariant(format!(
                            "participant {} availability outside [1, {slots}]",
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(ProblemInstance { task, level, instance_id, payload })
    }

    pub fn instance_id_for(task: TaskId, level: DifficultyLevel, sequence: u32) -> String {
        format!("{task}/{level}/{sequence}")
    }
}

/// Exact answer plus optimal objective value for an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSolution {
    Sas { index: usize },
    Edp { distance: u64 },
    Spp { path: Vec<u32>, total_weight: u64 },
    TspD { feasible: bool },
    GcpD { colorable: bool },
    Ksp { selection: Vec<usize>, value: u64 },
    Tsp { tour: Vec<u32>, cost: u64 },
    Gcp {
        chromatic_number: u32,
        /// Color of vertex `i + 1`, colors numbered from 1.
        coloring: Vec<u32>,
    },
    Msp {
        /// Slot assigned to meeting `j + 1`.
        assignment: Vec<u32>,
        participation: u64,
    },
}

/// A model's claimed answer in task-specific shape. Values are taken as
/// claimed; feasibility is the verifier's job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnswerClaim {
    Sas { index: i64 },
    Edp { operations: i64 },
    Spp { path: Vec<i64> },
    TspD { feasible: bool },
    GcpD { feasible: bool },
    Ksp { selection: Vec<i64> },
    Tsp { tour: Vec<i64> },
    Gcp { coloring: BTreeMap<i64, String> },
    Msp { assignment: BTreeMap<i64, i64> },
}

impl AnswerClaim {
    pub fn task(&self) -> TaskId {
        match self {
            AnswerClaim::Sas { .. } => TaskId::Sas,
            AnswerClaim::Edp { .. } => TaskId::Edp,
            AnswerClaim::Spp { .. } => TaskId::Spp,
            AnswerClaim::TspD { .. } => TaskId::TspD,
            AnswerClaim::GcpD { .. } => TaskId::GcpD,
            AnswerClaim::Ksp { .. } => TaskId::Ksp,
            AnswerClaim::Tsp { .. } => TaskId::Tsp,
            AnswerClaim::Gcp { .. } => TaskId::Gcp,
            AnswerClaim::Msp { .. } => TaskId::Msp,
        }
    }
}

/// A claim extracted from a model response, with the raw extracted text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedAnswer {
    pub claim: AnswerClaim,
    pub raw: String,
}
