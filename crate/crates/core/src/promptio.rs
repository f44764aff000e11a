//! Renders instances into prompt text (zero-shot and offset few-shot) and
//! parses tagged model responses back into task-shaped answers.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    AnswerClaim, OracleSolution, ParsedAnswer, Payload, ProblemInstance, TaskId, WeightedGraph,
    STANDARD_MAX_LEVEL,
};
use crate::oracles::{self, OracleError};
use crate::synth::BenchmarkSet;

/// Worked examples included in a few-shot prompt.
pub const DEFAULT_EXAMPLE_COUNT: usize = 5;
/// Few-shot offsets range from five levels easier to five levels harder.
pub const MAX_OFFSET: i8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    ZeroShot,
    FewShot,
}

/// Prompt configuration: zero-shot, or few-shot with examples drawn from
/// `question level + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub mode: PromptMode,
    pub offset: i8,
    pub example_count: usize,
}

impl PromptConfig {
    pub fn zero_shot() -> Self {
        PromptConfig { mode: PromptMode::ZeroShot, offset: 0, example_count: 0 }
    }

    pub fn few_shot(offset: i8) -> Result<Self, PromptError> {
        if offset.abs() > MAX_OFFSET {
            return Err(PromptError::BadOffset(offset));
        }
        Ok(PromptConfig {
            mode: PromptMode::FewShot,
            offset,
            example_count: DEFAULT_EXAMPLE_COUNT,
        })
    }

    /// Example level for a question at `question_level`, or None when the
    /// offset pushes it outside the standard ladder (the skip signal).
    pub fn example_level(&self, question_level: u8) -> Option<u8> {
        match self.mode {
            PromptMode::ZeroShot => None,
            PromptMode::FewShot => {
                let level = question_level as i16 + self.offset as i16;
                (1..=STANDARD_MAX_LEVEL as i16).contains(&level).then_some(level as u8)
            }
        }
    }

    /// Whether a question at `question_level` can be asked under this config.
    pub fn applies_to(&self, question_level: u8) -> bool {
        match self.mode {
            PromptMode::ZeroShot => true,
            PromptMode::FewShot => self.example_level(question_level).is_some(),
        }
    }

    pub fn key(&self) -> String {
        match self.mode {
            PromptMode::ZeroShot => "zeroshot".to_string(),
            PromptMode::FewShot => format!("fewshot{:+}", self.offset),
        }
    }
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("few-shot offset must lie in [-5, 5], got {0}")]
    BadOffset(i8),
    #[error("offset {offset} is invalid for a level-{question_level} question")]
    OffsetOutOfRange { question_level: u8, offset: i8 },
    #[error("pool has {available} {task} instances at level {level}, needed {needed}")]
    PoolExhausted { task: TaskId, level: u8, available: usize, needed: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("no <final_answer> tags found")]
    MissingTags,
    #[error("empty final answer payload")]
    EmptyPayload,
    #[error("final answer has the wrong shape: {0}")]
    Shape(String),
}

/// A fully rendered prompt plus the instance ids it was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub text: String,
    pub question_ref: String,
    pub example_refs: Vec<String>,
}

// ---------------------------------------------------------------------------
// Instance rendering
// ---------------------------------------------------------------------------

struct TaskTexts {
    description: &'static str,
    format_instructions: &'static str,
}

fn task_texts(task: TaskId) -> TaskTexts {
    match task {
        TaskId::Sas => TaskTexts {
            description: "The Sorted Array Search (SAS) problem is about finding the position of a target value within a sorted array of integers.",
            format_instructions: "Enclose your output within <root></root> tags. Present your reasoning in <reasoning></reasoning> tags and the final 0-based index in <final_answer></final_answer> tags, like <final_answer>{'Index': 'INDEX_OF_TARGET'}</final_answer>.",
        },
        TaskId::Edp => TaskTexts {
            description: "The Edit Distance Problem (EDP) involves finding the minimum number of operations required to transform one string into another, where each operation is either an insertion, deletion, or substitution of a single character.",
            format_instructions: "Enclose your output within <root></root> tags. Present your reasoning in <reasoning></reasoning> tags and the final minimum number of operations in <final_answer></final_answer> tags, like <final_answer>{'Operations': 'MINIMUM_NUMBER_OF_OPERATIONS'}</final_answer>.",
        },
        TaskId::Spp => TaskTexts {
            description: "The Shortest Path Problem (SPP) is about finding the path with the smallest total weight between two vertices in a weighted graph.",
            format_instructions: "Enclose your output within <root></root> tags. Present your reasoning in <reasoning></reasoning> tags and the final path and total weight in <final_answer></final_answer> tags, like <final_answer>{'Path': 'START->V1->...->END', 'TotalWeight': 'TOTAL_WEIGHT'}</final_answer>.",
        },
        TaskId::TspD => TaskTexts {
            description: "The decision version of the Traveling Salesman Problem (TSP-D) asks whether a salesman can visit each city exactly once and return to the starting city with a total travel distance no greater than a given value.",
            format_instructions: "Enclose your output within <root></root> tags. Present your reasoning in <reasoning></reasoning> tags and the final YES or NO answer in <final_answer></final_answer> tags, like <final_answer>{'Feasible': 'YES_OR_NO'}</final_answer>.",
        },
        TaskId::GcpD => TaskTexts {
            description: "The decision version of the Graph Coloring Problem (GCP-D) asks whether the vertices of a graph can be colored with a given number of colors so that no two adjacent vertices share the same color.",
            format_instructions: "Your output should contain two parts enclosed by <root></root>. First, your step by step reasoning wraped by <reasoning></reasoning>. Second, the final YES or NO answer, wrapped by final_answer tag, like <final_answer>{'Feasible': 'YES_OR_NO'}</final_answer>.",
        },
        TaskId::Ksp => TaskTexts {
            description: "The Knapsack Problem (KSP) asks for a subset of items that fits into a knapsack of fixed capacity while maximizing the total value of the selected items.",
            format_instructions: "Enclose your output within <root></root> tags. Present your reasoning in <reasoning></reasoning> tags and the final selection and total value in <final_answer></final_answer> tags, like <final_answer>{'SelectedItemIds': 'ID_1,ID_2,...', 'TotalValue': 'TOTAL_VALUE'}</final_answer>.",
        },
        TaskId::Tsp => TaskTexts {
            description: "The optimization version of the Traveling Salesman Problem (TSP) asks for the shortest tour that visits each city exactly once and returns to the starting city.",
            format_instructions: "Enclose your output within <root></root> tags. Present your reasoning in <reasoning></reasoning> tags and the final tour and total distance in <final_answer></final_answer> tags, like <final_answer>{'Tour': 'START->CITY_1->...->START', 'TotalDistance': 'TOTAL_DISTANCE'}</final_answer>.",
        },
        TaskId::Gcp => TaskTexts {
            description: "Graph coloring refers to the problem of coloring vertices of a graph in such a way that no two adjacent vertices have the same color.",
            format_instructions: "Your output should contain two parts enclosed by <root></root>. First, your step by step reasoning wraped by <reasoning></reasoning>. Second, the final output of all vertex numbers and their associated colors, wrapped by final_answer tag, like <final_answer>{0:'COLOR_1', 1:'COLOR_2', ...}</final_answer>.",
        },
        TaskId::Msp => TaskTexts {
            description: "The Meeting Scheduling Problem (MSP) deals with assigning meetings to time slots based on participant availability so that the total number of attendances is maximized.",
            format_instructions: "Enclose your output within <root></root> tags. Present your reasoning in <reasoning></reasoning> tags and the final assignment and total attendances in <final_answer></final_answer> tags, like <final_answer>{'Assignment': {'MEETING_ID': 'SLOT_ID', ...}, 'Participation': 'TOTAL_ATTENDANCES'}</final_answer>.",
        },
    }
}

enum EdgeStyle {
    Plain,
    Weighted,
    Distance,
}

fn graph_block(graph: &WeightedGraph, style: EdgeStyle) -> String {
    if graph.edge_count() == 0 {
        return "The graph has no edges.".to_string();
    }
    let header = match style {
        EdgeStyle::Plain | EdgeStyle::Weighted => "The graph is below:",
        EdgeStyle::Distance => "The distances between cities are below:",
    };
    let mut out = header.to_string();
    for e in graph.edges() {
        out.push('\n');
        out.push_str(&match style {
            EdgeStyle::Plain => {
                format!("    Vertex {} is connected to vertex {}.", e.u, e.v)
            }
            EdgeStyle::Weighted => format!(
                "    Vertex {} is connected to vertex {} with weight {}.",
                e.u, e.v, e.weight
            ),
            EdgeStyle::Distance => format!(
                "    The distance between city {} and city {} is {}.",
                e.u, e.v, e.weight
            ),
        });
    }
    out
}

fn format_array(array: &[i64]) -> String {
    let parts: Vec<String> = array.iter().map(|v| v.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn format_slot_list(slots: &std::collections::BTreeSet<u32>) -> String {
    let parts: Vec<String> = slots.iter().map(|s| s.to_string()).collect();
    parts.join(", ")
}

fn question_part(instance: &ProblemInstance) -> String {
    match &instance.payload {
        Payload::Sas { array, target } => format!(
            "You are given a sorted array of integers and a target value. The array is {} and the target value is {target}. The target value is guaranteed to be present exactly once; find the 0-based index at which it is located.\nPlease provide the 0-based index of the target value. Offer a brief explanation of your methodology. Keep your response concise and focused.",
            format_array(array)
        ),
        Payload::Edp { string_a, string_b } => format!(
            "Find the minimum number of operations required to transform the first string {string_a} into the second string {string_b}. The operations are insertion, deletion, and substitution of a single character, each requiring 1 edit operation.\nPlease provide the minimum number of operations required to transform the first string into the second string. Offer a brief explanation of your methodology. Keep your response concise and focused."
        ),
        Payload::Spp { graph } => format!(
            "There are {n} vertices 1 to {n} in a weighted graph. Find the shortest path from vertex 1 to vertex {n}.\nPlease provide the path as a sequence of vertices and its total weight. Offer a brief explanation of your methodology. Keep your response concise and focused.",
            n = graph.vertex_count()
        ),
        Payload::TspD { graph, threshold, .. } => format!(
            "There are {n} cities 1 to {n}. Determine whether there exists a tour that visits each city exactly once, returns to the starting city, and has a total distance less than or equal to {threshold}.\nPlease answer YES or NO. Offer a brief explanation of your methodology. Keep your response concise and focused.",
            n = graph.vertex_count()
        ),
        Payload::GcpD { graph, colors, .. } => format!(
            "There are {n} vertices 1 to {n} in a graph. Determine whether the graph can be colored using at most {colors} colors so that no two adjacent vertices share the same color.\nPlease answer YES or NO. You should also provide very short step by step reasoning.",
            n = graph.vertex_count()
        ),
        Payload::Ksp { items, capacity } => format!(
            "You are given {count} items 0 to {last} and a knapsack with weight capacity {capacity}. Select a subset of the items such that the total weight does not exceed the capacity and the total value is maximized.\nPlease provide the ids of the selected items and the total value. Offer a brief explanation of your methodology. Keep your response concise and focused.",
            count = items.len(),
            last = items.len() - 1
        ),
        Payload::Tsp { graph } => format!(
            "There are {n} cities 1 to {n}. Find the shortest tour that visits each city exactly once and returns to the starting city.\nPlease provide the tour as a sequence of cities and its total distance. Offer a brief explanation of your methodology. Keep your response concise and focused.",
            n = graph.vertex_count()
        ),
        Payload::Gcp { graph, color_budget } => format!(
            "There are {n} vertices 1 to {n} in a graph. You may use {color_budget} colors with alphabats from A, B, C,... to color the graph.\nPlease label every vertex, even if it is disconnected from the rest of the graph. Please provide each vertex's color. Do not skip any vertices. You should also provide very short step by step reasoning. Do not use multiple lines and try your best to save output tokens.",
            n = graph.vertex_count()
        ),
        Payload::Msp { availability, slots, meetings } => format!(
            "There are {p} participants, {slots} time slots 1 to {slots}, and {meetings} meetings 1 to {meetings} to schedule. Each meeting must be assigned to exactly one time slot and no two meetings may share a time slot. A participant attends a meeting if its time slot is within the participant's availability. Assign the meetings to time slots so that the total number of attendances across all meetings is maximized.\nPlease provide the assignment of meetings to time slots and the total number of attendances. Offer a brief explanation of your methodology. Keep your response concise and focused.",
            p = availability.len()
        ),
    }
}

fn data_part(instance: &ProblemInstance) -> Option<String> {
    match &instance.payload {
        Payload::Sas { .. } | Payload::Edp { .. } => None,
        Payload::Spp { graph } => Some(graph_block(graph, EdgeStyle::Weighted)),
        Payload::TspD { graph, .. } | Payload::Tsp { graph } => {
            Some(graph_block(graph, EdgeStyle::Distance))
        }
        Payload::GcpD { graph, .. } | Payload::Gcp { graph, .. } => {
            Some(graph_block(graph, EdgeStyle::Plain))
        }
        Payload::Ksp { items, .. } => {
            let mut out = "The items are below:".to_string();
            for (i, item) in items.iter().enumerate() {
                out.push_str(&format!(
                    "\n    Item {i} has weight {} and value {}.",
                    item.weight, item.value
                ));
            }
            Some(out)
        }
        Payload::Msp { availability, .. } => {
            let mut out = "The availability of each participant is below:".to_string();
            for (i, slots) in availability.iter().enumerate() {
                out.push_str(&format!(
                    "\n    Participant {} is available in time slots {}.",
                    i + 1,
                    format_slot_list(slots)
                ));
            }
            Some(out)
        }
    }
}

/// Human-readable problem body: the question statement plus any data block
/// (graph connection lines, item lists, availability lists).
pub fn render_instance_text(instance: &ProblemInstance) -> String {
    match data_part(instance) {
        Some(data) => format!("{}\n{}", question_part(instance), data),
        None => question_part(instance),
    }
}

// ---------------------------------------------------------------------------
// Final answer rendering
// ---------------------------------------------------------------------------

fn color_letter(color: u32) -> String {
    // Colors are numbered from 1; budgets are capped at the alphabet.
    char::from(b'A' + (color - 1) as u8).to_string()
}

fn arrow_list(values: impl IntoIterator<Item = u32>) -> String {
    let parts: Vec<String> = values.into_iter().map(|v| v.to_string()).collect();
    parts.join("->")
}

/// Renders an oracle solution in the final-answer payload format used by the
/// prompts (the text that belongs inside `<final_answer>` tags).
pub fn render_final_answer(solution: &OracleSolution) -> String {
    match solution {
        OracleSolution::Sas { index } => format!("{{'Index': '{index}'}}"),
        OracleSolution::Edp { distance } => format!("{{'Operations': '{distance}'}}"),
        OracleSolution::Spp { path, total_weight } => format!(
            "{{'Path': '{}', 'TotalWeight': '{total_weight}'}}",
            arrow_list(path.iter().copied())
        ),
        OracleSolution::TspD { feasible } => {
            format!("{{'Feasible': '{}'}}", if *feasible { "YES" } else { "NO" })
        }
        OracleSolution::GcpD { colorable } => {
            format!("{{'Feasible': '{}'}}", if *colorable { "YES" } else { "NO" })
        }
        OracleSolution::Ksp { selection, value } => {
            let ids: Vec<String> = selection.iter().map(|i| i.to_string()).collect();
            format!("{{'SelectedItemIds': '{}', 'TotalValue': '{value}'}}", ids.join(","))
        }
        OracleSolution::Tsp { tour, cost } => {
            let closed = tour.iter().copied().chain(tour.first().copied());
            format!("{{'Tour': '{}', 'TotalDistance': '{cost}'}}", arrow_list(closed))
        }
        OracleSolution::Gcp { coloring, .. } => {
            let parts: Vec<String> = coloring
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{}:'{}'", i + 1, color_letter(*c)))
                .collect();
            format!("{{{}}}", parts.join(", "))
        }
        OracleSolution::Msp { assignment, participation } => {
            let parts: Vec<String> = assignment
                .iter()
                .enumerate()
                .map(|(i, slot)| format!("'{}': '{slot}'", i + 1))
                .collect();
            format!(
                "{{'Assignment': {{{}}}, 'Participation': '{participation}'}}",
                parts.join(", ")
            )
        }
    }
}

// ---------------------------------------------------------------------------
// Prompt building
// ---------------------------------------------------------------------------

/// Per-task prompt templates. Defaults ship with the crate; custom templates
/// may be loaded from a directory of `{task}.txt` files using the
/// placeholders `{task_description}`, `{examples}`, `{question}`,
/// `{question_data}`, and `{format_instructions}`.
#[derive(Debug, Clone)]
pub struct PromptTemplates {
    map: BTreeMap<TaskId, String>,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        let mut map = BTreeMap::new();
        map.insert(TaskId::Sas, include_str!("../templates/sas.txt").to_string());
        map.insert(TaskId::Edp, include_str!("../templates/edp.txt").to_string());
        map.insert(TaskId::Spp, include_str!("../templates/spp.txt").to_string());
        map.insert(TaskId::TspD, include_str!("../templates/tsp_d.txt").to_string());
        map.insert(TaskId::GcpD, include_str!("../templates/gcp_d.txt").to_string());
        map.insert(TaskId::Ksp, include_str!("../templates/ksp.txt").to_string());
        map.insert(TaskId::Tsp, include_str!("../templates/tsp.txt").to_string());
        map.insert(TaskId::Gcp, include_str!("../templates/gcp.txt").to_string());
        map.insert(TaskId::Msp, include_str!("../templates/msp.txt").to_string());
        PromptTemplates { map }
    }
}

impl PromptTemplates {
    /// Loads `{task}.txt` overrides from a directory, falling back to the
    /// built-in template for missing files.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut templates = PromptTemplates::default();
        for task in TaskId::ALL {
            let path = dir.join(format!("{task}.txt"));
            if path.exists() {
                templates.map.insert(task, std::fs::read_to_string(&path)?);
            }
        }
        Ok(templates)
    }

    fn get(&self, task: TaskId) -> &str {
        self.map.get(&task).expect("all tasks have templates")
    }
}

/// Builds prompts against a fixed instance pool, caching oracle solutions for
/// few-shot example answers.
pub struct PromptBuilder<'a> {
    pool: &'a BenchmarkSet,
    templates: PromptTemplates,
    solutions: Mutex<HashMap<String, OracleSolution>>,
}

impl<'a> PromptBuilder<'a> {
    pub fn new(pool: &'a BenchmarkSet) -> Self {
        Self::with_templates(pool, PromptTemplates::default())
    }

    pub fn with_templates(pool: &'a BenchmarkSet, templates: PromptTemplates) -> Self {
        PromptBuilder { pool, templates, solutions: Mutex::new(HashMap::new()) }
    }

    fn example_answer(&self, instance: &ProblemInstance) -> Result<String, PromptError> {
        let mut cache = self.solutions.lock().expect("lock");
        if let Some(solution) = cache.get(&instance.instance_id) {
            return Ok(render_final_answer(solution));
        }
        let solution = oracles::solve(instance)?;
        let rendered = render_final_answer(&solution);
        cache.insert(instance.instance_id.clone(), solution);
        Ok(rendered)
    }

    pub fn build(
        &self,
        instance: &ProblemInstance,
        config: &PromptConfig,
    ) -> Result<Prompt, PromptError> {
        let (examples_text, example_refs) = match config.mode {
            PromptMode::ZeroShot => (String::new(), Vec::new()),
            PromptMode::FewShot => {
                let level = config.example_level(instance.level.get()).ok_or(
                    PromptError::OffsetOutOfRange {
                        question_level: instance.level.get(),
                        offset: config.offset,
                    },
                )?;
                // Deterministic selection: first instances in id order,
                // never including the question itself.
                let mut candidates = self.pool.by_task_level(instance.task, level);
                candidates.retain(|cand| cand.instance_id != instance.instance_id);
                candidates.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
                if candidates.len() < config.example_count {
                    return Err(PromptError::PoolExhausted {
                        task: instance.task,
                        level,
                        available: candidates.len(),
                        needed: config.example_count,
                    });
                }
                let chosen = &candidates[..config.example_count];
                let mut text = format!("Here are {} solved examples:\n\n", chosen.len());
                for (i, example) in chosen.iter().enumerate() {
                    let answer = self.example_answer(example)?;
                    text.push_str(&format!(
                        "Example {}:\n{}\nAnswer: <final_answer>{}</final_answer>\n\n",
                        i + 1,
                        render_instance_text(example),
                        answer
                    ));
                }
                let refs = chosen.iter().map(|e| e.instance_id.clone()).collect();
                (text, refs)
            }
        };

        let texts = task_texts(instance.task);
        let text = self
            .templates
            .get(instance.task)
            .replace("{task_description}", texts.description)
            .replace("{examples}", &examples_text)
            .replace("{question}", &question_part(instance))
            .replace("{question_data}", &data_part(instance).unwrap_or_default())
            .replace("{format_instructions}", texts.format_instructions)
            .trim_end()
            .to_string();

        Ok(Prompt { text, question_ref: instance.instance_id.clone(), example_refs })
    }
}

/// One-shot convenience wrapper around [`PromptBuilder`].
pub fn build_prompt(
    instance: &ProblemInstance,
    config: &PromptConfig,
    pool: &BenchmarkSet,
) -> Result<Prompt, PromptError> {
    PromptBuilder::new(pool).build(instance, config)
}

// ---------------------------------------------------------------------------
// Response parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Map(Vec<(String, Value)>),
    List(Vec<Value>),
    Text(String),
}

#[derive(Debug, PartialEq)]
enum Token {
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Text(String),
}

fn tokenize(payload: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = payload.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '{' => tokens.push(Token::LBrace),
            '}' => tokens.push(Token::RBrace),
            '[' => tokens.push(Token::LBracket),
            ']' => tokens.push(Token::RBracket),
            ':' => tokens.push(Token::Colon),
            ',' => tokens.push(Token::Comma),
            '\'' | '"' => {
                let quote = c;
                let mut text = String::new();
                i += 1;
                while i < chars.len() && chars[i] != quote {
                    text.push(chars[i]);
                    i += 1;
                }
                if i == chars.len() {
                    return Err(ParseError::Shape("unterminated quoted string".into()));
                }
                tokens.push(Token::Text(text));
            }
            c if c.is_whitespace() => {}
            _ => {
                let mut text = String::new();
                while i < chars.len()
                    && !chars[i].is_whitespace()
                    && !matches!(chars[i], '{' | '}' | '[' | ']' | ':' | ',' | '\'' | '"')
                {
                    text.push(chars[i]);
                    i += 1;
                }
                tokens.push(Token::Text(text));
                continue;
            }
        }
        i += 1;
    }
    Ok(tokens)
}

fn parse_value(tokens: &[Token], pos: &mut usize) -> Result<Value, ParseError> {
    match tokens.get(*pos) {
        Some(Token::LBrace) => {
            *pos += 1;
            let mut entries = Vec::new();
            loop {
                match tokens.get(*pos) {
                    Some(Token::RBrace) => {
                        *pos += 1;
                        return Ok(Value::Map(entries));
                    }
                    Some(Token::Comma) => {
                        *pos += 1;
                    }
                    Some(Token::Text(key)) => {
                        let key = key.clone();
                        *pos += 1;
                        match tokens.get(*pos) {
                            Some(Token::Colon) => *pos += 1,
                            _ => return Err(ParseError::Shape(format!(
                                "expected `:` after key `{key}`"
                            ))),
                        }
                        let value = parse_value(tokens, pos)?;
                        entries.push((key, value));
                    }
                    other => {
                        return Err(ParseError::Shape(format!(
                            "unexpected token in map: {other:?}"
                        )))
                    }
                }
            }
        }
        Some(Token::LBracket) => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    Some(Token::RBracket) => {
                        *pos += 1;
                        return Ok(Value::List(items));
                    }
                    Some(Token::Comma) => {
                        *pos += 1;
                    }
                    Some(_) => items.push(parse_value(tokens, pos)?),
                    None => return Err(ParseError::Shape("unterminated list".into())),
                }
            }
        }
        Some(Token::Text(text)) => {
            *pos += 1;
            Ok(Value::Text(text.clone()))
        }
        other => Err(ParseError::Shape(format!("unexpected token: {other:?}"))),
    }
}

fn parse_payload(payload: &str) -> Result<Value, ParseError> {
    let tokens = tokenize(payload)?;
    if tokens.is_empty() {
        return Err(ParseError::EmptyPayload);
    }
    let mut pos = 0;
    let value = parse_value(&tokens, &mut pos)?;
    Ok(value)
}

fn normalize_key(key: &str) -> String {
    key.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase()
}

fn lookup<'v>(entries: &'v [(String, Value)], names: &[&str]) -> Option<&'v Value> {
    entries
        .iter()
        .find(|(key, _)| names.contains(&normalize_key(key).as_str()))
        .map(|(_, value)| value)
}

fn to_int(value: &Value) -> Result<i64, ParseError> {
    match value {
        Value::Text(text) => text
            .trim()
            .parse::<i64>()
            .map_err(|_| ParseError::Shape(format!("`{text}` is not an integer"))),
        other => Err(ParseError::Shape(format!("expected an integer, found {other:?}"))),
    }
}

fn to_bool(value: &Value) -> Result<bool, ParseError> {
    match value {
        Value::Text(text) => match text.trim().to_ascii_lowercase().as_str() {
            "yes" | "true" | "y" => Ok(true),
            "no" | "false" | "n" => Ok(false),
            other => Err(ParseError::Shape(format!("`{other}` is not a yes/no answer"))),
        },
        other => Err(ParseError::Shape(format!("expected yes/no, found {other:?}"))),
    }
}

fn to_int_list(value: &Value) -> Result<Vec<i64>, ParseError> {
    match value {
        Value::List(items) => items.iter().map(to_int).collect(),
        Value::Text(text) => {
            let text = text.trim();
            if text.is_empty() || text.eq_ignore_ascii_case("none") {
                return Ok(Vec::new());
            }
            let separator = if text.contains("->") { "->" } else { "," };
            text.split(separator)
                .map(|part| {
                    part.trim()
                        .parse::<i64>()
                        .map_err(|_| ParseError::Shape(format!("`{part}` is not an integer")))
                })
                .collect()
        }
        other => Err(ParseError::Shape(format!("expected a list, found {other:?}"))),
    }
}

fn single_entry(entries: &[(String, Value)]) -> Option<&Value> {
    if entries.len() == 1 {
        Some(&entries[0].1)
    } else {
        None
    }
}

fn int_map(entries: &[(String, Value)]) -> Result<BTreeMap<i64, i64>, ParseError> {
    entries
        .iter()
        .map(|(key, value)| {
            let k = key
                .trim()
                .parse::<i64>()
                .map_err(|_| ParseError::Shape(format!("key `{key}` is not an integer")))?;
            Ok((k, to_int(value)?))
        })
        .collect()
}

fn claim_from_value(task: TaskId, value: &Value) -> Result<AnswerClaim, ParseError> {
    match task {
        TaskId::Sas => {
            let field = match value {
                Value::Map(entries) => lookup(entries, &["index", "position"])
                    .or_else(|| single_entry(entries))
                    .ok_or_else(|| ParseError::Shape("no index field".into()))?,
                other => other,
            };
            Ok(AnswerClaim::Sas { index: to_int(field)? })
        }
        TaskId::Edp => {
            let field = match value {
                Value::Map(entries) => {
                    lookup(entries, &["operations", "operation", "ops", "editdistance", "distance"])
                        .or_else(|| single_entry(entries))
                        .ok_or_else(|| ParseError::Shape("no operations field".into()))?
                }
                other => other,
            };
            Ok(AnswerClaim::Edp { operations: to_int(field)? })
        }
        TaskId::Spp => {
            let field = match value {
                Value::Map(entries) => lookup(entries, &["path"])
                    .ok_or_else(|| ParseError::Shape("no path field".into()))?,
                other => other,
            };
            Ok(AnswerClaim::Spp { path: to_int_list(field)? })
        }
        TaskId::TspD | TaskId::GcpD => {
            let field = match value {
                Value::Map(entries) => {
                    lookup(entries, &["feasible", "answer", "decision", "result"])
                        .or_else(|| single_entry(entries))
                        .ok_or_else(|| ParseError::Shape("no feasible field".into()))?
                }
                other => other,
            };
            let feasible = to_bool(field)?;
            Ok(match task {
                TaskId::TspD => AnswerClaim::TspD { feasible },
                _ => AnswerClaim::GcpD { feasible },
            })
        }
        TaskId::Ksp => {
            let field = match value {
                Value::Map(entries) => lookup(
                    entries,
                    &["selecteditemids", "selecteditems", "selection", "itemids", "items"],
                )
                .ok_or_else(|| ParseError::Shape("no selected items field".into()))?,
                other => other,
            };
            Ok(AnswerClaim::Ksp { selection: to_int_list(field)? })
        }
        TaskId::Tsp => {
            let field = match value {
                Value::Map(entries) => lookup(entries, &["tour", "path"])
                    .ok_or_else(|| ParseError::Shape("no tour field".into()))?,
                other => other,
            };
            let mut tour = to_int_list(field)?;
            // Tours are usually written closed (back at the start); unwrap.
            if tour.len() >= 2 && tour.first() == tour.last() {
                tour.pop();
            }
            Ok(AnswerClaim::Tsp { tour })
        }
        TaskId::Gcp => {
            let entries = match value {
                Value::Map(entries) => match lookup(entries, &["coloring", "colors"]) {
                    Some(Value::Map(inner)) => inner,
                    Some(other) => {
                        return Err(ParseError::Shape(format!(
                            "coloring field is not a map: {other:?}"
                        )))
                    }
                    None => entries,
                },
                other => {
                    return Err(ParseError::Shape(format!(
                        "expected a vertex-to-color map, found {other:?}"
                    )))
                }
            };
            let coloring = entries
                .iter()
                .map(|(key, value)| {
                    let vertex = key.trim().parse::<i64>().map_err(|_| {
                        ParseError::Shape(format!("vertex key `{key}` is not an integer"))
                    })?;
                    let color = match value {
                        Value::Text(text) if !text.trim().is_empty() => {
                            text.trim().to_ascii_uppercase()
                        }
                        other => {
                            return Err(ParseError::Shape(format!(
                                "color for vertex {vertex} is not a label: {other:?}"
                            )))
                        }
                    };
                    Ok((vertex, color))
                })
                .collect::<Result<BTreeMap<i64, String>, ParseError>>()?;
            if coloring.is_empty() {
                return Err(ParseError::Shape("empty coloring map".into()));
            }
            Ok(AnswerClaim::Gcp { coloring })
        }
        TaskId::Msp => {
            let entries = match value {
                Value::Map(entries) => match lookup(entries, &["assignment", "schedule"]) {
                    Some(Value::Map(inner)) => inner,
                    Some(other) => {
                        return Err(ParseError::Shape(format!(
                            "assignment field is not a map: {other:?}"
                        )))
                    }
                    None => entries,
                },
                other => {
                    return Err(ParseError::Shape(format!(
                        "expected a meeting-to-slot map, found {other:?}"
                    )))
                }
            };
            // Drop metric fields when the assignment is inlined at top level.
            let plain: Vec<(String, Value)> = entries
                .iter()
                .filter(|(key, _)| key.trim().parse::<i64>().is_ok())
                .cloned()
                .collect();
            if plain.is_empty() {
                return Err(ParseError::Shape("empty assignment map".into()));
            }
            Ok(AnswerClaim::Msp { assignment: int_map(&plain)? })
        }
    }
}

/// Extracts the first `<final_answer>` span and parses the task-specific
/// payload. Lenient on quoting and whitespace, strict on tag presence.
/// Never inspects reasoning content.
pub fn parse_response(task: TaskId, response: &str) -> Result<ParsedAnswer, ParseError> {
    let open = "<final_answer>";
    let close = "</final_answer>";
    let start = response.find(open).ok_or(ParseError::MissingTags)?;
    let rest = &response[start + open.len()..];
    let end = rest.find(close).ok_or(ParseError::MissingTags)?;
    let raw = rest[..end].trim().to_string();
    if raw.is_empty() {
        return Err(ParseError::EmptyPayload);
    }
    let value = parse_payload(&raw)?;
    let claim = claim_from_value(task, &value)?;
    Ok(ParsedAnswer { claim, raw })
}
