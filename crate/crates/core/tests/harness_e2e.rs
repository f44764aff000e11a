//! End-to-end harness behavior: built-in clients, retry accounting, record
//! persistence, resumability, and the CLI subcommands.

mod common;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::{Mutex, OnceLock};

use combench::cli::{self, Cli};
use combench::domain::TaskId;
use combench::harness::{
    self, load_records, persist_records, ClientError, EvaluationRecord, GibberishClient,
    ModelClient, OracleClient, RecordsWriter, RunOptions, MAX_ATTEMPTS,
};
use combench::promptio::{Prompt, PromptConfig};
use combench::synth::{self, BenchmarkSet};
use combench::verify::Status;
use clap::Parser;

fn small_benchmark() -> &'static BenchmarkSet {
    static POOL: OnceLock<BenchmarkSet> = OnceLock::new();
    POOL.get_or_init(|| synth::build_benchmark_range("e2e", 20_240_001, 1, 3).unwrap())
}

fn run_with(
    client: &(dyn ModelClient + Sync),
    tasks: &[TaskId],
    opts: &RunOptions,
    existing: &[EvaluationRecord],
) -> harness::RunOutcome {
    harness::run_evaluation(client, small_benchmark(), tasks, opts, existing, &mut |_| Ok(()))
        .unwrap()
}

#[test]
fn oracle_client_answers_everything_correctly() {
    let benchmark = small_benchmark();
    let client = OracleClient::new(benchmark);
    let opts = RunOptions::new("exact", PromptConfig::zero_shot());
    let outcome = run_with(&client, &TaskId::ALL, &opts, &[]);
    assert_eq!(outcome.records.len(), 9 * 3 * 10);
    for record in &outcome.records {
        assert_eq!(record.outcome.status, Status::Correct, "{}", record.instance_id);
        assert_eq!(record.attempts_used, 1);
        assert_eq!(record.responses.len(), 1);
    }
    let report = harness::report(&outcome.records).unwrap();
    assert_eq!(report.task_rows.len(), 9);
    for row in &report.task_rows {
        assert!((row.weighted_accuracy - 1.0).abs() < 1e-12, "{:?}", row);
        assert_eq!(row.failure_rate, 0.0);
    }
}

#[test]
fn gibberish_client_burns_all_attempts() {
    let opts = RunOptions::new("gibberish", PromptConfig::zero_shot());
    let outcome = run_with(&GibberishClient, &[TaskId::Sas, TaskId::GcpD], &opts, &[]);
    for record in &outcome.records {
        assert_eq!(record.outcome.status, Status::ParseFailure);
        assert_eq!(record.attempts_used, MAX_ATTEMPTS);
        assert_eq!(record.responses.len(), MAX_ATTEMPTS as usize);
    }
    let report = harness::report(&outcome.records).unwrap();
    for row in &report.task_rows {
        assert_eq!(row.failure_rate, 1.0);
        assert_eq!(row.weighted_accuracy, 0.0);
    }
}

/// Returns untagged text a fixed number of times per instance, then defers to
/// the oracle responder.
struct FlakyClient {
    inner: OracleClient,
    failures_before_success: u32,
    calls: Mutex<HashMap<String, u32>>,
}

impl ModelClient for FlakyClient {
    fn complete(&self, prompt: &Prompt) -> Result<String, ClientError> {
        let mut calls = self.calls.lock().unwrap();
        let seen = calls.entry(prompt.question_ref.clone()).or_insert(0);
        *seen += 1;
        if *seen <= self.failures_before_success {
            Ok("thinking out loud without any tags".to_string())
        } else {
            self.inner.complete(prompt)
        }
    }
}

#[test]
fn two_parse_failures_then_success_uses_three_attempts() {
    let benchmark = small_benchmark();
    let client = FlakyClient {
        inner: OracleClient::new(benchmark),
        failures_before_success: 2,
        calls: Mutex::new(HashMap::new()),
    };
    let opts = RunOptions::new("flaky", PromptConfig::zero_shot());
    let outcome = run_with(&client, &[TaskId::Edp], &opts, &[]);
    for record in &outcome.records {
        assert_eq!(record.outcome.status, Status::Correct);
        assert_eq!(record.attempts_used, 3);
        assert_eq!(record.responses.len(), 3);
    }
}

#[test]
fn records_round_trip_and_survive_corruption() {
    let benchmark = small_benchmark();
    let client = OracleClient::new(benchmark);
    let opts = RunOptions::new("exact", PromptConfig::zero_shot());
    let records = run_with(&client, &[TaskId::Sas], &opts, &[]).records;
    assert_eq!(records.len(), 30);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.jsonl");
    persist_records(&records, &path).unwrap();
    let (loaded, issues) = load_records(&path).unwrap();
    assert_eq!(loaded, records);
    assert!(issues.is_empty());

    // Corrupt one middle line: the rest still load, the line is reported.
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[10] = "{not json";
    fs::write(&path, lines.join("\n")).unwrap();
    let (survivors, issues) = load_records(&path).unwrap();
    assert_eq!(survivors.len(), records.len() - 1);
    assert_eq!(issues.len(), 1);
    assert_eq!(issues[0].line, 11);

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let (none, issues) = load_records(&empty).unwrap();
    assert!(none.is_empty());
    assert!(issues.is_empty());
}

#[test]
fn interrupted_runs_resume_without_duplicates() {
    let benchmark = small_benchmark();
    let client = OracleClient::new(benchmark);
    let opts = RunOptions::new("exact", PromptConfig::zero_shot());

    // A full run in one go.
    let direct = run_with(&client, &[TaskId::Sas, TaskId::Edp], &opts, &[]);
    let direct_keys: HashSet<_> = direct.records.iter().map(|r| r.key()).collect();

    // The same run split in two, resuming from the first half's records.
    let first = run_with(&client, &[TaskId::Sas], &opts, &[]);
    let second = run_with(&client, &[TaskId::Sas, TaskId::Edp], &opts, &first.records);
    assert_eq!(second.resumed, first.records.len());

    let mut combined: Vec<_> = first.records.iter().map(|r| r.key()).collect();
    combined.extend(second.records.iter().map(|r| r.key()));
    let combined_set: HashSet<_> = combined.iter().cloned().collect();
    assert_eq!(combined.len(), combined_set.len(), "no duplicate records");
    assert_eq!(combined_set, direct_keys);
}

#[test]
fn offset_skips_exactly_the_out_of_range_levels() {
    let benchmark = small_benchmark();
    let client = OracleClient::new(benchmark);
    let mut opts = RunOptions::new("exact", PromptConfig::few_shot(-2).unwrap());
    opts.workers = 2;
    let outcome = run_with(&client, &[TaskId::Edp], &opts, &[]);
    // Pool has levels 1..=3; offset -2 leaves only level 3 askable.
    assert_eq!(outcome.skipped_offset.len(), 20);
    assert_eq!(outcome.records.len(), 10);
    for record in &outcome.records {
        assert_eq!(record.level().unwrap(), 3);
        assert_eq!(record.outcome.status, Status::Correct);
    }
}

#[test]
fn report_groups_by_model() {
    let benchmark = small_benchmark();
    let client = OracleClient::new(benchmark);
    let mut records =
        run_with(&client, &[TaskId::Sas], &RunOptions::new("model-a", PromptConfig::zero_shot()), &[])
            .records;
    records.extend(
        run_with(&GibberishClient, &[TaskId::Sas], &RunOptions::new("model-b", PromptConfig::zero_shot()), &[])
            .records,
    );
    let report = harness::report(&records).unwrap();
    assert_eq!(report.task_rows.len(), 2);
    assert!(report.task_rows.iter().any(|r| r.model_id == "model-a" && r.failure_rate == 0.0));
    assert!(report.task_rows.iter().any(|r| r.model_id == "model-b" && r.failure_rate == 1.0));
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

fn cli_run(args: &[&str]) -> anyhow::Result<()> {
    cli::run(Cli::parse_from(args))
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn generate_writes_manifest_and_is_idempotent() {
    std::env::set_var("SOURCE_DATE_EPOCH", "0");
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        cli_run(&[
            "combench",
            "--quiet",
            "--seed",
            "7",
            "generate",
            "--tag",
            "vtest",
            "--out",
            out.to_str().unwrap(),
            "--levels",
            "1..2",
        ])
        .unwrap();
    }
    let set_dir = out_a.join("vtest");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(set_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["total"], 9 * 2 * 10);
    assert_eq!(manifest["per_task"]["sas"], 20);
    for task in TaskId::ALL {
        assert!(set_dir.join(synth::task_file_name(task)).exists(), "{task}");
    }
    assert_eq!(
        read_dir_bytes(&set_dir),
        read_dir_bytes(&out_b.join("vtest")),
        "identical tag+seed must produce identical bytes"
    );

    let loaded = synth::load_benchmark(&set_dir).unwrap();
    assert_eq!(loaded.instances.len(), 180);
}

#[test]
fn generate_supports_extended_ladders() {
    let dir = tempfile::tempdir().unwrap();
    cli_run(&[
        "combench",
        "--quiet",
        "--seed",
        "4",
        "generate",
        "--tag",
        "vext",
        "--out",
        dir.path().to_str().unwrap(),
        "--levels",
        "11..12",
    ])
    .unwrap();
    let set = synth::load_benchmark(&dir.path().join("vext")).unwrap();
    assert_eq!(set.instances.len(), 9 * 2 * 10);
    for instance in &set.instances {
        assert!((11..=12).contains(&instance.level.get()));
    }
    // Tour sizes cap at 13 cities so the exact solver stays in range.
    for instance in set.by_task_level(TaskId::Tsp, 12) {
        let combench::domain::Payload::Tsp { graph } = &instance.payload else { panic!() };
        assert_eq!(graph.vertex_count(), 13);
    }
    // Extended instances still verify end to end.
    let client = OracleClient::new(&set);
    let opts = RunOptions::new("exact", PromptConfig::zero_shot());
    let outcome =
        harness::run_evaluation(&client, &set, &[TaskId::Gcp, TaskId::Msp], &opts, &[], &mut |_| {
            Ok(())
        })
        .unwrap();
    assert!(outcome.records.iter().all(|r| r.outcome.status == Status::Correct));
}

#[test]
fn generate_fails_cleanly_on_unwritable_output() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "file, not a directory").unwrap();
    let out = blocker.join("nested");
    let err = cli_run(&[
        "combench",
        "--quiet",
        "generate",
        "--tag",
        "vtest",
        "--out",
        out.to_str().unwrap(),
        "--levels",
        "1..1",
    ]);
    assert!(err.is_err());
}

fn write_oracle_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("model.conf");
    fs::write(&path, "[model]\nclient = oracle\nmodel = exact-oracle\n\n[runner]\nworkers = 2\n")
        .unwrap();
    path
}

fn generate_small(dir: &Path) -> std::path::PathBuf {
    cli_run(&[
        "combench",
        "--quiet",
        "--seed",
        "99",
        "generate",
        "--tag",
        "vrun",
        "--out",
        dir.to_str().unwrap(),
        "--levels",
        "1..2",
    ])
    .unwrap();
    dir.join("vrun")
}

#[test]
fn run_command_requires_model_config() {
    let dir = tempfile::tempdir().unwrap();
    let benchmark = generate_small(dir.path());
    let records = dir.path().join("records.jsonl");
    let err = cli_run(&[
        "combench",
        "--quiet",
        "run",
        "--benchmark",
        benchmark.to_str().unwrap(),
        "--records",
        records.to_str().unwrap(),
    ]);
    assert!(err.is_err());
}

#[test]
fn run_command_evaluates_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let benchmark = generate_small(dir.path());
    let config = write_oracle_config(dir.path());
    let records = dir.path().join("records.jsonl");
    let args = [
        "combench",
        "--quiet",
        "--config",
        config.to_str().unwrap(),
        "run",
        "--benchmark",
        benchmark.to_str().unwrap(),
        "--records",
        records.to_str().unwrap(),
        "--tasks",
        "sas,edp",
    ];
    cli_run(&args).unwrap();
    let (first, _) = load_records(&records).unwrap();
    assert_eq!(first.len(), 2 * 2 * 10);
    // Re-running appends nothing new.
    cli_run(&args).unwrap();
    let (second, _) = load_records(&records).unwrap();
    assert_eq!(second.len(), first.len());
}

#[test]
fn verify_command_judges_answer_files() {
    let dir = tempfile::tempdir().unwrap();
    let benchmark_dir = generate_small(dir.path());
    let benchmark = synth::load_benchmark(&benchmark_dir).unwrap();

    let mut lines = Vec::new();
    for instance in benchmark.instances.iter().take(25) {
        let solution = combench::oracles::solve(instance).unwrap();
        let line = serde_json::json!({
            "instance_id": instance.instance_id,
            "final_answer": combench::promptio::render_final_answer(&solution),
        });
        lines.push(line.to_string());
    }
    lines.push(serde_json::json!({"instance_id": "sas/9/99", "final_answer": "{'Index': '0'}"}).to_string());
    let answers = dir.path().join("answers.jsonl");
    fs::write(&answers, lines.join("\n")).unwrap();

    let out = dir.path().join("outcomes.jsonl");
    cli_run(&[
        "combench",
        "--quiet",
        "verify",
        "--benchmark",
        benchmark_dir.to_str().unwrap(),
        "--answers",
        answers.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();

    let text = fs::read_to_string(&out).unwrap();
    let parsed: Vec<serde_json::Value> =
        text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(parsed.len(), 26);
    let correct = parsed.iter().filter(|v| v["status"] == "correct").count();
    assert_eq!(correct, 25);
    assert!(parsed.iter().any(|v| v["error"].is_string()));

    // An empty answers file yields an empty outcome file and exit success.
    let empty_in = dir.path().join("empty.jsonl");
    fs::write(&empty_in, "").unwrap();
    let empty_out = dir.path().join("empty_out.jsonl");
    cli_run(&[
        "combench",
        "--quiet",
        "verify",
        "--benchmark",
        benchmark_dir.to_str().unwrap(),
        "--answers",
        empty_in.to_str().unwrap(),
        "--out",
        empty_out.to_str().unwrap(),
    ])
    .unwrap();
    assert_eq!(fs::read_to_string(&empty_out).unwrap(), "");
}

#[test]
fn report_command_merges_files_and_tolerates_corrupt_ones() {
    let benchmark = small_benchmark();
    let client = OracleClient::new(benchmark);
    let dir = tempfile::tempdir().unwrap();

    let run_a =
        run_with(&client, &[TaskId::Sas], &RunOptions::new("model-a", PromptConfig::zero_shot()), &[]);
    let run_b =
        run_with(&client, &[TaskId::Sas], &RunOptions::new("model-b", PromptConfig::zero_shot()), &[]);
    let file_a = dir.path().join("a.jsonl");
    let file_b = dir.path().join("b.jsonl");
    let file_bad = dir.path().join("bad.jsonl");
    persist_records(&run_a.records, &file_a).unwrap();
    persist_records(&run_b.records, &file_b).unwrap();
    fs::write(&file_bad, "definitely not json\n").unwrap();

    let out = dir.path().join("report");
    cli_run(&[
        "combench",
        "--quiet",
        "report",
        file_a.to_str().unwrap(),
        file_b.to_str().unwrap(),
        file_bad.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();

    let table = fs::read_to_string(out.join("wa_fr_by_task.csv")).unwrap();
    assert!(table.contains("model-a,sas"));
    assert!(table.contains("model-b,sas"));
    for file in ["wa_fr_by_class.csv", "accuracy_by_level.csv", "wilcoxon_by_class.csv", "report.txt"] {
        assert!(out.join(file).exists(), "{file}");
    }
}

#[test]
fn reverifying_stored_records_reproduces_their_outcomes() {
    let benchmark = small_benchmark();
    let client = OracleClient::new(benchmark);
    let opts = RunOptions::new("exact", PromptConfig::zero_shot());
    let mut records = run_with(&client, &[TaskId::Gcp], &opts, &[]).records;
    records.extend(run_with(&GibberishClient, &[TaskId::Gcp], &RunOptions::new("g", PromptConfig::zero_shot()), &[]).records);

    let outcomes = harness::reverify_records(&records, benchmark).unwrap();
    assert_eq!(outcomes.len(), records.len());
    for (record, (id, fresh)) in records.iter().zip(&outcomes) {
        assert_eq!(&record.instance_id, id);
        assert_eq!(record.outcome.status, fresh.status, "{id}");
    }
}

#[test]
fn sink_streams_records_during_the_run() {
    let benchmark = small_benchmark();
    let client = OracleClient::new(benchmark);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stream.jsonl");
    let mut writer = RecordsWriter::append(&path).unwrap();
    let opts = RunOptions::new("exact", PromptConfig::zero_shot());
    let outcome = harness::run_evaluation(
        &client,
        benchmark,
        &[TaskId::Msp],
        &opts,
        &[],
        &mut |record| writer.write(record),
    )
    .unwrap();
    drop(writer);
    let (loaded, issues) = load_records(&path).unwrap();
    assert!(issues.is_empty());
    assert_eq!(loaded.len(), outcome.records.len());
}
