//! Evaluation orchestration: builds prompts, calls a model endpoint, retries
//! on parse failure, verifies answers, and persists line-delimited records.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ProblemInstance, TaskId};
use crate::metrics::{
    self, weighted_accuracy_over, ClassRow, LevelRow, Report, TaskRow, WilcoxonRow,
};
use crate::oracles::{self, OracleError};
use crate::promptio::{
    render_final_answer, parse_response, Prompt, PromptBuilder, PromptConfig, PromptError,
};
use crate::synth::BenchmarkSet;
use crate::verify::{verify, Status, VerificationOutcome};

/// Maximum endpoint tries per question before recording a parse failure.
pub const MAX_ATTEMPTS: u32 = 10;
pub const RECORD_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("client error: {0}")]
    Client(String),
    #[error("no records to report on")]
    EmptyInput,
    #[error("malformed instance id `{0}`")]
    MalformedId(String),
}

#[derive(Debug, Error)]
pub enum ClientError {
    /// Worth retrying with backoff (rate limits, timeouts, 5xx).
    #[error("transient: {0}")]
    Transient(String),
    #[error("fatal: {0}")]
    Fatal(String),
}

/// A model endpoint. Implementations must be callable from multiple worker
/// threads.
pub trait ModelClient: Sync {
    fn complete(&self, prompt: &Prompt) -> Result<String, ClientError>;
}

/// Perfect responder backed by the exact solvers; answers any instance it can
/// find in its benchmark index.
pub struct OracleClient {
    index: HashMap<String, ProblemInstance>,
}

impl OracleClient {
    pub fn new(benchmark: &BenchmarkSet) -> Self {
        let index = benchmark
            .instances
            .iter()
            .map(|inst| (inst.instance_id.clone(), inst.clone()))
            .collect();
        OracleClient { index }
    }
}

impl ModelClient for OracleClient {
    fn complete(&self, prompt: &Prompt) -> Result<String, ClientError> {
        let instance = self
            .index
            .get(&prompt.question_ref)
            .ok_or_else(|| ClientError::Fatal(format!("unknown instance {}", prompt.question_ref)))?;
        let solution = oracles::solve(instance).map_err(|e| ClientError::Fatal(e.to_string()))?;
        Ok(format!(
            "<root><reasoning>solved with the exact method</reasoning><final_answer>{}</final_answer></root>",
            render_final_answer(&solution)
        ))
    }
}

/// Always responds with untagged text, so every attempt fails to parse.
pub struct GibberishClient;

impl ModelClient for GibberishClient {
    fn complete(&self, _prompt: &Prompt) -> Result<String, ClientError> {
        Ok("As a language model, I would rather discuss the weather.".to_string())
    }
}

/// Generic HTTP chat-completions endpoint.
#[derive(Debug, Clone)]
pub struct HttpClientConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token. Tokens are
    /// never read from flags or config values directly.
    pub auth_token_env: Option<String>,
    pub timeout_s: u64,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u64>,
}

pub struct HttpModelClient {
    config: HttpClientConfig,
    client: reqwest::blocking::Client,
    token: Option<String>,
}

impl HttpModelClient {
    pub fn new(config: HttpClientConfig) -> Result<Self, HarnessError> {
        let token = match &config.auth_token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                HarnessError::Config(format!("auth token variable {var} is not set"))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_s))
            .build()
            .map_err(|e| HarnessError::Client(e.to_string()))?;
        Ok(HttpModelClient { config, client, token })
    }
}

impl HttpModelClient {
    fn request_body(&self, prompt: &Prompt) -> serde_json::Value {
        let mut body = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt.text}],
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = serde_json::json!(t);
        }
        if let Some(m) = self.config.max_tokens {
            body["max_tokens"] = serde_json::json!(m);
        }
        body
    }

    fn extract_content(value: &serde_json::Value) -> Option<String> {
        value["choices"][0]["message"]["content"].as_str().map(|s| s.to_string())
    }
}

impl ModelClient for HttpModelClient {
    fn complete(&self, prompt: &Prompt) -> Result<String, ClientError> {
        let body = self.request_body(prompt);
        let mut request = self.client.post(&self.config.base_url).json(&body);
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .map_err(|e| ClientError::Transient(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(ClientError::Transient(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(ClientError::Fatal(format!("status {status}")));
        }
        let value: serde_json::Value = response
            .json()
            .map_err(|e| ClientError::Fatal(format!("bad response body: {e}")))?;
        Self::extract_content(&value)
            .ok_or_else(|| ClientError::Fatal("response has no message content".into()))
    }
}

// ---------------------------------------------------------------------------
// Flat key-value configuration
// ---------------------------------------------------------------------------

/// Parses the flat `key = value` configuration format with `[section]`
/// headers and `#` comments.
pub fn parse_flat_config(text: &str) -> BTreeMap<String, BTreeMap<String, String>> {
    let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut current = String::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            current = line[1..line.len() - 1].trim().to_string();
            sections.entry(current.clone()).or_default();
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            sections
                .entry(current.clone())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
    }
    sections
}

/// Builds a model client from the `[model]` section of a configuration file.
/// Returns the client together with its caller-supplied model id.
pub fn client_from_config(
    model: &BTreeMap<String, String>,
    benchmark: &BenchmarkSet,
) -> Result<(Box<dyn ModelClient + Sync>, String), HarnessError> {
    let kind = model.get("client").map(String::as_str).unwrap_or("http");
    match kind {
        "oracle" => Ok((
            Box::new(OracleClient::new(benchmark)),
            model.get("model").cloned().unwrap_or_else(|| "oracle".to_string()),
        )),
        "gibberish" => Ok((
            Box::new(GibberishClient),
            model.get("model").cloned().unwrap_or_else(|| "gibberish".to_string()),
        )),
        "http" => {
            let base_url = model
                .get("base_url")
                .cloned()
                .ok_or_else(|| HarnessError::Config("missing base_url".into()))?;
            let model_name = model
                .get("model")
                .cloned()
                .ok_or_else(|| HarnessError::Config("missing model".into()))?;
            let config = HttpClientConfig {
                base_url,
                model: model_name.clone(),
                auth_token_env: model.get("auth_token_env").cloned(),
                timeout_s: model
                    .get("timeout_s")
                    .map(|v| v.parse().map_err(|_| HarnessError::Config("bad timeout_s".into())))
                    .transpose()?
                    .unwrap_or(120),
                temperature: model
                    .get("temperature")
                    .map(|v| {
                        v.parse().map_err(|_| HarnessError::Config("bad temperature".into()))
                    })
                    .transpose()?,
                max_tokens: model
                    .get("max_tokens")
                    .map(|v| v.parse().map_err(|_| HarnessError::Config("bad max_tokens".into())))
                    .transpose()?,
            };
            Ok((Box::new(HttpModelClient::new(config)?), model_name))
        }
        other => Err(HarnessError::Config(format!("unknown client kind `{other}`"))),
    }
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// One (model, instance, prompt-config) trial with its full transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub schema_version: String,
    pub instance_id: String,
    pub model_id: String,
    pub config: PromptConfig,
    pub attempts_used: u32,
    pub outcome: VerificationOutcome,
    pub prompt: String,
    pub responses: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

impl EvaluationRecord {
    /// Resume key: one record per (instance, model, prompt config).
    pub fn key(&self) -> (String, String, String) {
        (self.instance_id.clone(), self.model_id.clone(), self.config.key())
    }

    /// Level parsed from the `task/level/sequence` instance id.
    pub fn level(&self) -> Result<u8, HarnessError> {
        let mut parts = self.instance_id.split('/');
        let level = parts
            .nth(1)
            .and_then(|p| p.parse::<u8>().ok())
            .filter(|&l| l >= 1)
            .ok_or_else(|| HarnessError::MalformedId(self.instance_id.clone()))?;
        Ok(level)
    }

    pub fn task(&self) -> Result<TaskId, HarnessError> {
        self.instance_id
            .split('/')
            .next()
            .and_then(|p| p.parse::<TaskId>().ok())
            .ok_or_else(|| HarnessError::MalformedId(self.instance_id.clone()))
    }
}

/// Appends records to a line-delimited file, one complete record per line.
pub struct RecordsWriter {
    writer: BufWriter<fs::File>,
}

impl RecordsWriter {
    pub fn append(path: &Path) -> Result<Self, HarnessError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordsWriter { writer: BufWriter::new(file) })
    }

    pub fn write(&mut self, record: &EvaluationRecord) -> Result<(), HarnessError> {
        let line = serde_json::to_string(record).expect("serialize record");
        writeln!(self.writer, "{line}")?;
        self.writer.flush()?;
        Ok(())
    }
}

/// Writes all records to `path` (append mode).
pub fn persist_records(records: &[EvaluationRecord], path: &Path) -> Result<(), HarnessError> {
    let mut writer = RecordsWriter::append(path)?;
    for record in records {
        writer.write(record)?;
    }
    Ok(())
}

/// A recoverable problem found while loading a records file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadIssue {
    pub line: usize,
    pub message: String,
}

/// Loads records, skipping corrupt lines but reporting them with their line
/// numbers. An empty or missing trailing newline is fine.
pub fn load_records(path: &Path) -> Result<(Vec<EvaluationRecord>, Vec<LoadIssue>), HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<EvaluationRecord>(line) {
            Ok(record) => {
                if record.schema_version != RECORD_SCHEMA_VERSION {
                    issues.push(LoadIssue {
                        line: i + 1,
                        message: format!("unsupported schema version {}", record.schema_version),
                    });
                } else {
                    records.push(record);
                }
            }
            Err(e) => issues.push(LoadIssue { line: i + 1, message: e.to_string() }),
        }
    }
    Ok((records, issues))
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub model_id: String,
    pub config: PromptConfig,
    pub workers: usize,
    /// Backoff retries for transient transport failures. These do not consume
    /// parse attempts; only received-but-unparseable responses do.
    pub transport_retries: u32,
}

impl RunOptions {
    pub fn new(model_id: impl Into<String>, config: PromptConfig) -> Self {
        RunOptions { model_id: model_id.into(), config, workers: 4, transport_retries: 3 }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<EvaluationRecord>,
    /// Instances skipped because the few-shot offset left the ladder.
    pub skipped_offset: Vec<String>,
    /// Instances skipped because a record already existed.
    pub resumed: usize,
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn call_with_backoff(
    client: &(dyn ModelClient + Sync),
    prompt: &Prompt,
    transport_retries: u32,
) -> Result<String, ClientError> {
    let mut delay = Duration::from_millis(250);
    let mut retries = 0;
    loop {
        match client.complete(prompt) {
            Ok(text) => return Ok(text),
            Err(ClientError::Transient(msg)) if retries < transport_retries => {
                retries += 1;
                std::thread::sleep(delay);
                delay = (delay * 2).min(Duration::from_secs(4));
                let _ = msg;
            }
            Err(err) => return Err(err),
        }
    }
}

fn evaluate_one(
    client: &(dyn ModelClient + Sync),
    builder: &PromptBuilder<'_>,
    instance: &ProblemInstance,
    opts: &RunOptions,
) -> Result<EvaluationRecord, HarnessError> {
    let prompt = builder.build(instance, &opts.config)?;
    let oracle = oracles::solve(instance)?;
    let started_unix = now_unix();
    let mut responses = Vec::new();
    let mut verdict: Option<(u32, VerificationOutcome)> = None;
    let mut last_parse_error = String::new();

    for attempt in 1..=MAX_ATTEMPTS {
        match call_with_backoff(client, &prompt, opts.transport_retries) {
            Ok(text) => {
                let parsed = parse_response(instance.task, &text);
                responses.push(text);
                match parsed {
                    Ok(answer) => {
                        verdict = Some((attempt, verify(instance, &answer, &oracle)));
                        break;
                    }
                    Err(e) => last_parse_error = e.to_string(),
                }
            }
            Err(err) => {
                // The endpoint never returned a response; log it and burn the
                // attempt so a dead endpoint cannot loop forever.
                responses.push(format!("<<transport failure: {err}>>"));
                last_parse_error = err.to_string();
            }
        }
    }

    let (attempts_used, outcome) = verdict.unwrap_or_else(|| {
        (
            MAX_ATTEMPTS,
            VerificationOutcome::parse_failure(format!(
                "no parseable final answer in {MAX_ATTEMPTS} attempts (last: {last_parse_error})"
            )),
        )
    });

    Ok(EvaluationRecord {
        schema_version: RECORD_SCHEMA_VERSION.to_string(),
        instance_id: instance.instance_id.clone(),
        model_id: opts.model_id.clone(),
        config: opts.config,
        attempts_used,
        outcome,
        prompt: prompt.text,
        responses,
        started_unix,
        finished_unix: now_unix(),
    })
}

/// Runs the evaluation over every offset-valid instance of the requested
/// tasks, skipping (instance, model, config) triples already present in
/// `existing`. Each finished record is passed to `sink` before being
/// collected, so interrupted runs resume cleanly.
pub fn run_evaluation(
    client: &(dyn ModelClient + Sync),
    benchmark: &BenchmarkSet,
    tasks: &[TaskId],
    opts: &RunOptions,
    existing: &[EvaluationRecord],
    sink: &mut dyn FnMut(&EvaluationRecord) -> Result<(), HarnessError>,
) -> Result<RunOutcome, HarnessError> {
    let done: HashSet<(String, String, String)> =
        existing.iter().map(|r| r.key()).collect();

    let mut work: Vec<&ProblemInstance> = Vec::new();
    let mut skipped_offset = Vec::new();
    let mut resumed = 0;
    for instance in &benchmark.instances {
        if !tasks.contains(&instance.task) {
            continue;
        }
        if !opts.config.applies_to(instance.level.get()) {
            skipped_offset.push(instance.instance_id.clone());
            continue;
        }
        let key = (instance.instance_id.clone(), opts.model_id.clone(), opts.config.key());
        if done.contains(&key) {
            resumed += 1;
            continue;
        }
        work.push(instance);
    }

    let builder = PromptBuilder::new(benchmark);
    let next = AtomicUsize::new(0);
    let errors: Mutex<Vec<HarnessError>> = Mutex::new(Vec::new());
    let (tx, rx) = mpsc::channel::<EvaluationRecord>();
    let workers = opts.workers.max(1).min(work.len().max(1));

    let mut records = Vec::with_capacity(work.len());
    std::thread::scope(|scope| -> Result<(), HarnessError> {
        for _ in 0..workers {
            let tx = tx.clone();
            let work = &work;
            let next = &next;
            let errors = &errors;
            let builder = &builder;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= work.len() {
                    break;
                }
                match evaluate_one(client, builder, work[i], opts) {
                    Ok(record) => {
                        if tx.send(record).is_err() {
                            break;
                        }
                    }
                    Err(err) => {
                        errors.lock().expect("lock").push(err);
                        break;
                    }
                }
            });
        }
        drop(tx);
        // Single serialized sink keeps the records file append-consistent.
        for record in rx {
            sink(&record)?;
            records.push(record);
        }
        Ok(())
    })?;

    if let Some(err) = errors.into_inner().expect("lock").into_iter().next() {
        return Err(err);
    }
    Ok(RunOutcome { records, skipped_offset, resumed })
}

/// Re-judges persisted records against a benchmark: each record's last
/// response is parsed and verified afresh, yielding one outcome per record.
pub fn reverify_records(
    records: &[EvaluationRecord],
    benchmark: &BenchmarkSet,
) -> Result<Vec<(String, VerificationOutcome)>, HarnessError> {
    let index: HashMap<&str, &ProblemInstance> = benchmark
        .instances
        .iter()
        .map(|inst| (inst.instance_id.as_str(), inst))
        .collect();
    let mut outcomes = Vec::with_capacity(records.len());
    for record in records {
        let instance = index
            .get(record.instance_id.as_str())
            .ok_or_else(|| HarnessError::MalformedId(record.instance_id.clone()))?;
        let outcome = match record.responses.last() {
            None => VerificationOutcome::parse_failure("record has no responses"),
            Some(response) => match parse_response(instance.task, response) {
                Ok(answer) => verify(instance, &answer, &oracles::solve(instance)?),
                Err(err) => VerificationOutcome::parse_failure(err.to_string()),
            },
        };
        outcomes.push((record.instance_id.clone(), outcome));
    }
    Ok(outcomes)
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Clone, Copy)]
struct Cell {
    questions: usize,
    correct: usize,
    failures: usize,
}

/// What one Wilcoxon pair is when comparing two complexity classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairingUnit {
    /// Per-level mean accuracy over the class's tasks (up to 10 pairs).
    #[default]
    Level,
    /// Per-(task-rank, level) accuracy, pairing the classes' tasks in
    /// canonical order (up to 30 pairs).
    TaskLevel,
}

/// Builds the per-task / per-class WA-FR report with pairwise class
/// comparisons paired per level. Deterministic: the same records produce
/// byte-identical tables.
pub fn report(records: &[EvaluationRecord]) -> Result<Report, HarnessError> {
    report_with_pairing(records, PairingUnit::Level)
}

/// [`report`] with an explicit Wilcoxon pairing unit.
pub fn report_with_pairing(
    records: &[EvaluationRecord],
    pairing: PairingUnit,
) -> Result<Report, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptyInput);
    }

    // (model, task, level) -> counts. Levels beyond 10 fall into their own
    // ten-level window so extended runs report over their own pools.
    let mut cells: BTreeMap<(String, TaskId, u8), Cell> = BTreeMap::new();
    for record in records {
        let task = record.task()?;
        let level = record.level()?;
        let cell = cells.entry((record.model_id.clone(), task, level)).or_default();
        cell.questions += 1;
        match record.outcome.status {
            Status::Correct => cell.correct += 1,
            Status::Incorrect => {}
            Status::ParseFailure => cell.failures += 1,
        }
    }

    let window = |level: u8| (level - 1) / 10;
    let slot = |level: u8| level - window(level) * 10;

    let mut level_rows = Vec::new();
    for ((model, task, level), cell) in &cells {
        level_rows.push(LevelRow {
            model_id: model.clone(),
            task: *task,
            level: *level,
            accuracy: cell.correct as f64 / cell.questions as f64,
            failures: cell.failures,
            questions: cell.questions,
        });
    }

    let mut task_rows = Vec::new();
    let mut task_groups: BTreeMap<(String, TaskId, u8), Vec<(u8, Cell)>> = BTreeMap::new();
    for ((model, task, level), cell) in &cells {
        task_groups
            .entry((model.clone(), *task, window(*level)))
            .or_default()
            .push((*level, *cell));
    }
    for ((model, task, _window), group) in &task_groups {
        let levels: Vec<(u8, f64)> = group
            .iter()
            .map(|(level, cell)| (slot(*level), cell.correct as f64 / cell.questions as f64))
            .collect();
        let questions: usize = group.iter().map(|(_, c)| c.questions).sum();
        let failures: usize = group.iter().map(|(_, c)| c.failures).sum();
        task_rows.push(TaskRow {
            model_id: model.clone(),
            task: *task,
            class: task.complexity_class(),
            weighted_accuracy: weighted_accuracy_over(&levels),
            failure_rate: failures as f64 / questions as f64,
            questions,
            parse_failures: failures,
        });
    }

    let mut class_rows = Vec::new();
    let mut class_groups: BTreeMap<(String, crate::domain::ComplexityClass, u8), BTreeMap<u8, Cell>> =
        BTreeMap::new();
    for ((model, task, level), cell) in &cells {
        let entry = class_groups
            .entry((model.clone(), task.complexity_class(), window(*level)))
            .or_default()
            .entry(slot(*level))
            .or_default();
        entry.questions += cell.questions;
        entry.correct += cell.correct;
        entry.failures += cell.failures;
    }
    for ((model, class, _window), by_slot) in &class_groups {
        let levels: Vec<(u8, f64)> = by_slot
            .iter()
            .map(|(slot, cell)| (*slot, cell.correct as f64 / cell.questions as f64))
            .collect();
        let questions: usize = by_slot.values().map(|c| c.questions).sum();
        let failures: usize = by_slot.values().map(|c| c.failures).sum();
        class_rows.push(ClassRow {
            model_id: model.clone(),
            class: *class,
            weighted_accuracy: weighted_accuracy_over(&levels),
            failure_rate: failures as f64 / questions as f64,
        });
    }

    // Pairwise class comparison with matched samples.
    let mut wilcoxon_rows = Vec::new();
    let models: Vec<String> = {
        let mut seen: Vec<String> = cells.keys().map(|(m, _, _)| m.clone()).collect();
        seen.dedup();
        seen
    };
    for model in &models {
        let mut per_task: BTreeMap<(TaskId, u8), (usize, usize)> = BTreeMap::new();
        for ((m, task, level), cell) in &cells {
            if m != model {
                continue;
            }
            let entry = per_task.entry((*task, *level)).or_default();
            entry.0 += cell.correct;
            entry.1 += cell.questions;
        }
        let accuracy = |task: TaskId, level: u8| -> Option<f64> {
            per_task.get(&(task, level)).map(|(c, q)| *c as f64 / *q as f64)
        };
        let classes: Vec<_> = {
            let mut present: Vec<_> = crate::domain::ComplexityClass::ALL
                .into_iter()
                .filter(|class| class.tasks().iter().any(|t| {
                    per_task.keys().any(|(task, _)| task == t)
                }))
                .collect();
            present.dedup();
            present
        };
        for (i, &a) in classes.iter().enumerate() {
            for &b in &classes[i + 1..] {
                let mut x = Vec::new();
                let mut y = Vec::new();
                match pairing {
                    PairingUnit::Level => {
                        // Mean class accuracy per level, paired by level.
                        for level in 1..=crate::domain::EXTENDED_MAX_LEVEL {
                            let means = [a, b].map(|class| {
                                let accs: Vec<f64> = class
                                    .tasks()
                                    .iter()
                                    .filter_map(|t| accuracy(*t, level))
                                    .collect();
                                if accs.is_empty() {
                                    None
                                } else {
                                    Some(accs.iter().sum::<f64>() / accs.len() as f64)
                                }
                            });
                            if let [Some(ma), Some(mb)] = means {
                                x.push(ma);
                                y.push(mb);
                            }
                        }
                    }
                    PairingUnit::TaskLevel => {
                        // Tasks paired by canonical rank within each class.
                        for (ta, tb) in a.tasks().into_iter().zip(b.tasks()) {
                            for level in 1..=crate::domain::EXTENDED_MAX_LEVEL {
                                if let (Some(xa), Some(yb)) =
                                    (accuracy(ta, level), accuracy(tb, level))
                                {
                                    x.push(xa);
                                    y.push(yb);
                                }
                            }
                        }
                    }
                }
                let row = match metrics::wilcoxon_signed_rank(&x, &y) {
                    Ok(outcome) => WilcoxonRow {
                        model_id: model.clone(),
                        class_a: a,
                        class_b: b,
                        statistic: Some(outcome.statistic),
                        p_value: Some(outcome.p_value),
                        pairs: outcome.effective_pairs,
                        note: String::new(),
                    },
                    Err(err) => WilcoxonRow {
                        model_id: model.clone(),
                        class_a: a,
                        class_b: b,
                        statistic: None,
                        p_value: None,
                        pairs: 0,
                        note: err.to_string(),
                    },
                };
                wilcoxon_rows.push(row);
            }
        }
    }

    Ok(Report { task_rows, class_rows, level_rows, wilcoxon_rows })
}
