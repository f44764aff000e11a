//! Deterministic instance generation across tasks, levels, and benchmark
//! versions. Every function here is a pure function of its arguments, so a
//! (version tag, master seed) pair regenerates a byte-identical set.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::codec::{encode_instance, CodecError, CSV_HEADER};
use crate::domain::{
    DifficultyLevel, DomainError, Item, Payload, ProblemInstance, TaskId, WeightedGraph,
    EXTENDED_MAX_LEVEL, STANDARD_MAX_LEVEL,
};
use crate::oracles::{self, OracleError};

/// Questions generated per (task, level) cell.
pub const INSTANCES_PER_LEVEL: u32 = 10;

/// Edge weights and item weights/values are drawn from this small range so
/// prompts stay short and objective sums stay exact.
pub const WEIGHT_RANGE: (u32, u32) = (1, 20);

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad manifest: {0}")]
    Manifest(String),
}

/// Size parameters for one difficulty level of one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelParams {
    Graph { vertices: u32, edges: u32, weight_min: u32, weight_max: u32 },
    Array { length: u32, min_value: i64, max_value: i64 },
    Strings { length: u32 },
    Knapsack { items: u32 },
    Meetings { participants: u32, slots: u32, meetings: u32 },
}

impl LevelParams {
    /// Size-like parameters, used to check monotone growth across levels.
    fn size_profile(&self) -> Vec<u64> {
        match *self {
            LevelParams::Graph { vertices, edges, .. } => vec![vertices as u64, edges as u64],
            LevelParams::Array { length, max_value, .. } => vec![length as u64, max_value as u64],
            LevelParams::Strings { length } => vec![length as u64],
            LevelParams::Knapsack { items } => vec![items as u64],
            LevelParams::Meetings { participants, slots, meetings } => {
                vec![participants as u64, slots as u64, meetings as u64]
            }
        }
    }
}

/// Parameters for `task` at `level` (supports the extended range `[1, 20]`).
///
/// The coloring ladder starts at 6 vertices / 6 edges and adds one vertex and
/// two edges per level. The other ladders follow the same additive pattern,
/// sized so the exact solvers stay fast at the top level: tour instances cap
/// at 13 cities.
pub fn ladder_params(task: TaskId, level: u8) -> LevelParams {
    let l = level as u32;
    let (weight_min, weight_max) = WEIGHT_RANGE;
    match task {
        TaskId::Sas => LevelParams::Array {
            length: 10 + 15 * (l - 1),
            min_value: 0,
            max_value: 20 * l as i64,
        },
        TaskId::Edp => LevelParams::Strings { length: 4 + 2 * (l - 1) },
        TaskId::Spp => {
            let vertices = 4 + l;
            LevelParams::Graph { vertices, edges: 3 * vertices / 2, weight_min, weight_max }
        }
        TaskId::Tsp | TaskId::TspD => {
            let vertices = (3 + l).min(oracles::TSP_MAX_VERTICES);
            LevelParams::Graph {
                vertices,
                edges: (vertices * (vertices - 1)) / 2,
                weight_min,
                weight_max,
            }
        }
        TaskId::Gcp | TaskId::GcpD => LevelParams::Graph {
            vertices: 5 + l,
            edges: 4 + 2 * l,
            weight_min,
            weight_max,
        },
        TaskId::Ksp => LevelParams::Knapsack { items: 4 + l },
        TaskId::Msp => LevelParams::Meetings {
            participants: 3 + l,
            slots: 4 + l,
            meetings: 2 + l.div_ceil(2),
        },
    }
}

/// The fixed ten-level parameter schedule for one task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderSpec {
    pub task: TaskId,
    pub levels: Vec<LevelParams>,
}

impl LadderSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.levels.len() != STANDARD_MAX_LEVEL as usize {
            return Err(SynthError::Param(format!(
                "ladder for {} has {} levels, expected {}",
                self.task,
                self.levels.len(),
                STANDARD_MAX_LEVEL
            )));
        }
        for pair in self.levels.windows(2) {
            let (a, b) = (pair[0].size_profile(), pair[1].size_profile());
            if a.iter().zip(&b).any(|(x, y)| x > y) {
                return Err(SynthError::Param(format!(
                    "ladder for {} is not monotone non-decreasing",
                    self.task
                )));
            }
        }
        for (i, params) in self.levels.iter().enumerate() {
            if let LevelParams::Graph { vertices, edges, .. } = params {
                if u64::from(*edges) > WeightedGraph::max_edges(*vertices) {
                    return Err(SynthError::Param(format!(
                        "ladder for {} level {} asks for {} edges on {} vertices",
                        self.task,
                        i + 1,
                        edges,
                        vertices
                    )));
                }
                if self.task == TaskId::Spp && *edges < vertices - 1 {
                    return Err(SynthError::Param(format!(
                        "ladder for {} level {} cannot be connected",
                        self.task,
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The fixed difficulty ladder for `task`, levels 1 through 10.
pub fn difficulty_ladder(task: TaskId) -> LadderSpec {
    LadderSpec {
        task,
        levels: (1..=STANDARD_MAX_LEVEL).map(|l| ladder_params(task, l)).collect(),
    }
}

/// Stable 64-bit seed derived from a text key (first eight bytes of SHA-256,
/// little endian). Stable across platforms and releases.
pub fn derive_seed(key: &str) -> u64 {
    let digest = Sha256::digest(key.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// Generates a simple undirected graph with exactly `m` edges and weights
/// uniform in `weight_range`. Identical arguments produce identical graphs.
pub fn synth_graph(
    n: u32,
    m: u32,
    weight_range: (u32, u32),
    require_connected: bool,
    seed: u64,
) -> Result<WeightedGraph, SynthError> {
    if n == 0 {
        return Err(SynthError::Param("graph needs at least one vertex".into()));
    }
    if u64::from(m) > WeightedGraph::max_edges(n) {
        return Err(SynthError::Param(format!(
            "{m} edges exceed the maximum {} for {n} vertices",
            WeightedGraph::max_edges(n)
        )));
    }
    if require_connected && m + 1 < n {
        return Err(SynthError::Param(format!(
            "{m} edges cannot connect {n} vertices"
        )));
    }
    if weight_range.0 > weight_range.1 {
        return Err(SynthError::Param("empty weight range".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: BTreeSet<(u32, u32)> = BTreeSet::new();

    if require_connected && n > 1 {
        // Random spanning tree: attach each vertex of a shuffled order to a
        // random earlier vertex.
        let mut order: Vec<u32> = (1..=n).collect();
        order.shuffle(&mut rng);
        for i in 1..n as usize {
            let a = order[i];
            let b = order[rng.random_range(0..i)];
            chosen.insert((a.min(b), a.max(b)));
        }
    }

    let mut pool: Vec<(u32, u32)> = Vec::new();
    for u in 1..=n {
        for v in u + 1..=n {
            if !chosen.contains(&(u, v)) {
                pool.push((u, v));
            }
        }
    }
    pool.shuffle(&mut rng);
    for &pair in pool.iter().take(m as usize - chosen.len()) {
        chosen.insert(pair);
    }

    // Weights are drawn in canonical edge order so they do not depend on the
    // selection path above.
    let edges: Vec<(u32, u32, u32)> = chosen
        .into_iter()
        .map(|(u, v)| (u, v, rng.random_range(weight_range.0..=weight_range.1)))
        .collect();
    Ok(WeightedGraph::new(n, edges)?)
}

/// Decision-instance parameters chosen adjacent to the optimum, with the
/// YES/NO side picked by a seeded fair coin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionParams {
    TourThreshold { threshold: u64, yes: bool },
    ColorCount { colors: u32, yes: bool },
}

/// Solves the graph exactly, then places the decision boundary: YES keeps the
/// optimum itself, NO moves one unit below it (degenerate optima force YES so
/// the instance stays well-posed).
pub fn calibrate_decision_params(
    task: TaskId,
    graph: &WeightedGraph,
    seed: u64,
) -> Result<DecisionParams, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let yes = rng.random_bool(0.5);
    match task {
        TaskId::TspD => {
            let (_, optimum) = oracles::solve_tsp(graph)?;
            if yes || optimum == 0 {
                Ok(DecisionParams::TourThreshold { threshold: optimum, yes: true })
            } else {
                Ok(DecisionParams::TourThreshold { threshold: optimum - 1, yes: false })
            }
        }
        TaskId::GcpD => {
            let (chi, _) = oracles::chromatic_number(graph);
            if yes || chi == 1 {
                Ok(DecisionParams::ColorCount { colors: chi, yes: true })
            } else {
                Ok(DecisionParams::ColorCount { colors: chi - 1, yes: false })
            }
        }
        other => Err(SynthError::Param(format!(
            "calibration only applies to decision tasks, not {other}"
        ))),
    }
}

/// Generates one linear-payload instance (sequence 0). See [`synth_instance`]
/// for the general entry point.
pub fn synth_linear(
    task: TaskId,
    level: DifficultyLevel,
    seed: u64,
) -> Result<ProblemInstance, SynthError> {
    if !task.is_linear() {
        return Err(SynthError::Param(format!("{task} is not a linear-payload task")));
    }
    synth_instance(task, level, 0, seed)
}

/// Generates the instance identified by (task, level, sequence) from `seed`.
/// Deterministic; decision tasks are calibrated against the exact oracle.
pub fn synth_instance(
    task: TaskId,
    level: DifficultyLevel,
    sequence: u32,
    seed: u64,
) -> Result<ProblemInstance, SynthError> {
    let params = ladder_params(task, level.get());
    let id = ProblemInstance::instance_id_for(task, level, sequence);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let payload = match (task, params) {
        (TaskId::Sas, LevelParams::Array { length, min_value, max_value }) => {
            // Distinct elements make the target index unique.
            let span = (max_value - min_value + 1) as usize;
            let mut array: Vec<i64> = rand::seq::index::sample(&mut rng, span, length as usize)
                .into_iter()
                .map(|offset| min_value + offset as i64)
                .collect();
            array.sort_unstable();
            let target = array[rng.random_range(0..array.len())];
            Payload::Sas { array, target }
        }
        (TaskId::Edp, LevelParams::Strings { length }) => {
            let word = |rng: &mut ChaCha8Rng| -> String {
                (0..length).map(|_| (b'a' + rng.random_range(0..26u8)) as char).collect()
            };
            let string_a = word(&mut rng);
            let string_b = word(&mut rng);
            Payload::Edp { string_a, string_b }
        }
        (TaskId::Ksp, LevelParams::Knapsack { items }) => {
            let items: Vec<Item> = (0..items)
                .map(|_| Item {
                    weight: rng.random_range(WEIGHT_RANGE.0 as u64..=WEIGHT_RANGE.1 as u64),
                    value: rng.random_range(WEIGHT_RANGE.0 as u64..=WEIGHT_RANGE.1 as u64),
                })
                .collect();
            let total: u64 = items.iter().map(|it| it.weight).sum();
            let lightest = items.iter().map(|it| it.weight).min().unwrap_or(1);
            // Roughly 40% of the total weight, but always enough for one item.
            let capacity = ((total as f64 * 0.4).round() as u64).max(lightest);
            Payload::Ksp { items, capacity }
        }
        (TaskId::Msp, LevelParams::Meetings { participants, slots, meetings }) => {
            let availability: Vec<BTreeSet<u32>> = (0..participants)
                .map(|_| {
                    let size = rng.random_range(1..=slots as usize);
                    rand::seq::index::sample(&mut rng, slots as usize, size)
                        .into_iter()
                        .map(|s| s as u32 + 1)
                        .collect()
                })
                .collect();
            Payload::Msp { availability, slots, meetings }
        }
        (TaskId::Spp, LevelParams::Graph { vertices, edges, weight_min, weight_max }) => {
            let graph = synth_graph(vertices, edges, (weight_min, weight_max), true, seed)?;
            Payload::Spp { graph }
        }
        (TaskId::Tsp, LevelParams::Graph { vertices, edges, weight_min, weight_max }) => {
            let graph = synth_graph(vertices, edges, (weight_min, weight_max), false, seed)?;
            Payload::Tsp { graph }
        }
        (TaskId::TspD, LevelParams::Graph { vertices, edges, weight_min, weight_max }) => {
            let graph = synth_graph(vertices, edges, (weight_min, weight_max), false, seed)?;
            let calibration_seed = derive_seed(&format!("{seed}/calibration"));
            match calibrate_decision_params(task, &graph, calibration_seed)? {
                DecisionParams::TourThreshold { threshold, yes } => {
                    Payload::TspD { graph, threshold, ground_truth: yes }
                }
                DecisionParams::ColorCount { .. } => unreachable!(),
            }
        }
        (TaskId::GcpD, LevelParams::Graph { vertices, edges, weight_min, weight_max }) => {
            let graph = synth_graph(vertices, edges, (weight_min, weight_max), false, seed)?;
            let calibration_seed = derive_seed(&format!("{seed}/calibration"));
            match calibrate_decision_params(task, &graph, calibration_seed)? {
                DecisionParams::ColorCount { colors, yes } => {
                    Payload::GcpD { graph, colors, ground_truth: yes }
                }
                DecisionParams::TourThreshold { .. } => unreachable!(),
            }
        }
        (TaskId::Gcp, LevelParams::Graph { vertices, edges, weight_min, weight_max }) => {
            let graph = synth_graph(vertices, edges, (weight_min, weight_max), false, seed)?;
            let (chi, _) = oracles::chromatic_number(&graph);
            // Offer two spare colors, capped at the 26-letter alphabet.
            let color_budget = (chi + 2).min(26);
            Payload::Gcp { graph, color_budget }
        }
        (task, params) => {
            return Err(SynthError::Param(format!(
                "ladder mismatch for {task}: {params:?}"
            )))
        }
    };

    Ok(ProblemInstance::new(task, level, id, payload)?)
}

/// A full benchmark build: every task, every level in range, ten instances
/// per level.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSet {
    pub version_tag: String,
    pub master_seed: u64,
    pub instances: Vec<ProblemInstance>,
}

impl BenchmarkSet {
    pub fn find(&self, instance_id: &str) -> Option<&ProblemInstance> {
        self.instances.iter().find(|inst| inst.instance_id == instance_id)
    }

    pub fn by_task_level(&self, task: TaskId, level: u8) -> Vec<&ProblemInstance> {
        self.instances
            .iter()
            .filter(|inst| inst.task == task && inst.level.get() == level)
            .collect()
    }

    pub fn task_counts(&self) -> BTreeMap<TaskId, usize> {
        let mut counts = BTreeMap::new();
        for inst in &self.instances {
            *counts.entry(inst.task).or_insert(0) += 1;
        }
        counts
    }
}

/// Builds the standard 900-instance set: 9 tasks x 10 levels x 10 instances.
pub fn build_benchmark(version_tag: &str, master_seed: u64) -> Result<BenchmarkSet, SynthError> {
    build_benchmark_range(version_tag, master_seed, 1, STANDARD_MAX_LEVEL)
}

/// Builds a set over an explicit level range (extended ladders reach 20).
pub fn build_benchmark_range(
    version_tag: &str,
    master_seed: u64,
    level_lo: u8,
    level_hi: u8,
) -> Result<BenchmarkSet, SynthError> {
    if level_lo == 0 || level_hi > EXTENDED_MAX_LEVEL || level_lo > level_hi {
        return Err(SynthError::Param(format!(
            "bad level range {level_lo}..{level_hi}"
        )));
    }
    let mut instances = Vec::new();
    for task in TaskId::ALL {
        for level in level_lo..=level_hi {
            let level = DifficultyLevel::extended(level)?;
            for sequence in 0..INSTANCES_PER_LEVEL {
                let seed =
                    derive_seed(&format!("{master_seed}/{task}/{level}/{sequence}"));
                instances.push(synth_instance(task, level, sequence, seed)?);
            }
        }
    }
    Ok(BenchmarkSet { version_tag: version_tag.to_string(), master_seed, instances })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version_tag: String,
    pub master_seed: u64,
    pub created: String,
    pub level_min: u8,
    pub level_max: u8,
    pub per_task: BTreeMap<String, usize>,
    pub total: usize,
}

fn creation_timestamp() -> String {
    // Honor SOURCE_DATE_EPOCH so identical builds are byte-identical.
    let epoch = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse::<i64>().ok());
    let when = match epoch.and_then(chrono::DateTime::from_timestamp_secs) {
        Some(ts) => ts,
        None => chrono::Utc::now(),
    };
    when.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Persists a set as one directory: per-task CSV/JSONL files plus a manifest.
pub fn write_benchmark(set: &BenchmarkSet, dir: &Path) -> Result<(), SynthError> {
    fs::create_dir_all(dir)?;
    let mut per_task = BTreeMap::new();
    let mut level_min = u8::MAX;
    let mut level_max = 0u8;
    for task in TaskId::ALL {
        let instances: Vec<&ProblemInstance> =
            set.instances.iter().filter(|inst| inst.task == task).collect();
        if instances.is_empty() {
            continue;
        }
        per_task.insert(task.as_str().to_string(), instances.len());
        for inst in &instances {
            level_min = level_min.min(inst.level.get());
            level_max = level_max.max(inst.level.get());
        }
        let path = dir.join(task_file_name(task));
        let mut file = fs::File::create(&path)?;
        if task.is_graph() {
            writeln!(file, "{CSV_HEADER}")?;
        }
        for inst in instances {
            writeln!(file, "{}", encode_instance(inst))?;
        }
    }
    let manifest = Manifest {
        version_tag: set.version_tag.clone(),
        master_seed: set.master_seed,
        created: creation_timestamp(),
        level_min,
        level_max,
        per_task,
        total: set.instances.len(),
    };
    let mut file = fs::File::create(dir.join("manifest.json"))?;
    writeln!(file, "{}", serde_json::to_string_pretty(&manifest).expect("serialize"))?;
    Ok(())
}

pub fn task_file_name(task: TaskId) -> String {
    if task.is_graph() {
        format!("{task}.csv")
    } else {
        format!("{task}.jsonl")
    }
}

/// Loads a benchmark directory written by [`write_benchmark`].
pub fn load_benchmark(dir: &Path) -> Result<BenchmarkSet, SynthError> {
    let manifest_text = fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: Manifest = serde_json::from_str(&manifest_text)
        .map_err(|e| SynthError::Manifest(e.to_string()))?;
    let mut instances = Vec::new();
    for task in TaskId::ALL {
        let path = dir.join(task_file_name(task));
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path)?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || (task.is_graph() && i == 0) {
                continue;
            }
            instances.push(crate::domain::codec::decode_instance(line, task)?);
        }
    }
    if instances.len() != manifest.total {
        return Err(SynthError::Manifest(format!(
            "manifest declares {} instances, found {}",
            manifest.total,
            instances.len()
        )));
    }
    Ok(BenchmarkSet {
        version_tag: manifest.version_tag,
        master_seed: manifest.master_seed,
        instances,
    })
}
