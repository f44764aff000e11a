//! Command-line entry points: generate, run, verify, report.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::domain::{ProblemInstance, TaskId};
use crate::harness::{
    self, client_from_config, parse_flat_config, EvaluationRecord, PairingUnit, RecordsWriter,
    RunOptions,
};
use crate::oracles;
use crate::promptio::{parse_response, PromptConfig};
use crate::synth::{self, derive_seed};
use crate::verify::{verify, VerificationOutcome};

#[derive(Parser)]
#[command(name = "combench", version, about = "Deterministic combinatorial-reasoning benchmark")]
pub struct Cli {
    /// Suppress normal stdout output; diagnostics still go to stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Configuration file (model endpoint section, runner section).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; defaults to a stable hash of the version tag.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Build a benchmark version and persist it as a directory.
    Generate {
        /// Version tag, e.g. v2026-08.
        #[arg(long)]
        tag: String,
        /// Output directory; the set is written to <out>/<tag>/.
        #[arg(long)]
        out: PathBuf,
        /// Level range, e.g. 1..10 (extended ladders accept up to 20).
        #[arg(long, default_value = "1..10")]
        levels: String,
    },
    /// Evaluate a model endpoint over a benchmark directory.
    Run {
        /// Benchmark directory (the one containing manifest.json).
        #[arg(long)]
        benchmark: PathBuf,
        /// Records file to append to (resumes if it exists).
        #[arg(long)]
        records: PathBuf,
        /// zeroshot or fewshot.
        #[arg(long, default_value = "zeroshot")]
        mode: String,
        /// Few-shot example level offset in [-5, 5].
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        offset: i8,
        /// Comma-separated task subset, e.g. sas,edp; defaults to all nine.
        #[arg(long)]
        tasks: Option<String>,
        /// Override the model id recorded with each trial.
        #[arg(long)]
        model_id: Option<String>,
    },
    /// Judge a file of final answers against a benchmark's oracles.
    Verify {
        #[arg(long)]
        benchmark: PathBuf,
        /// Line-delimited JSON: {"instance_id": ..., "final_answer": ...}.
        #[arg(long)]
        answers: PathBuf,
        /// Output file of outcome lines.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate records files into WA/FR tables and level matrices.
    Report {
        /// One or more records files.
        records: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Wilcoxon pairing unit: level (class means per level) or
        /// task-level (tasks paired by rank across classes).
        #[arg(long, default_value = "level")]
        pairing: String,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { tag, out, levels } => {
            let seed = cli.seed.unwrap_or_else(|| derive_seed(&tag));
            cmd_generate(&tag, seed, &out, &levels, cli.quiet)
        }
        Command::Run { benchmark, records, mode, offset, tasks, model_id } => cmd_run(
            &benchmark,
            cli.config.as_deref(),
            &records,
            &mode,
            offset,
            tasks.as_deref(),
            model_id,
            cli.quiet,
        ),
        Command::Verify { benchmark, answers, out } => {
            cmd_verify(&benchmark, &answers, &out, cli.quiet)
        }
        Command::Report { records, out, pairing } => {
            let pairing = match pairing.as_str() {
                "level" => PairingUnit::Level,
                "task-level" | "task_level" => PairingUnit::TaskLevel,
                other => bail!("unknown pairing unit `{other}`"),
            };
            cmd_report(&records, &out, pairing, cli.quiet)
        }
    }
}

fn parse_level_range(spec: &str) -> Result<(u8, u8)> {
    let (lo, hi) = spec
        .split_once("..")
        .or_else(|| spec.split_once('-'))
        .unwrap_or((spec, spec));
    let lo: u8 = lo.trim().parse().with_context(|| format!("bad level range `{spec}`"))?;
    let hi: u8 = hi.trim().parse().with_context(|| format!("bad level range `{spec}`"))?;
    Ok((lo, hi))
}

pub fn cmd_generate(tag: &str, seed: u64, out: &Path, levels: &str, quiet: bool) -> Result<()> {
    let (lo, hi) = parse_level_range(levels)?;
    let set = synth::build_benchmark_range(tag, seed, lo, hi)?;
    let dir = out.join(tag);
    synth::write_benchmark(&set, &dir)
        .with_context(|| format!("writing benchmark to {}", dir.display()))?;
    if !quiet {
        println!("wrote {} instances to {}", set.instances.len(), dir.display());
        for (task, count) in set.task_counts() {
            println!(
                "  {task}: {count} instances ({} per level)",
                synth::INSTANCES_PER_LEVEL
            );
        }
    }
    Ok(())
}

fn parse_tasks(spec: Option<&str>) -> Result<Vec<TaskId>> {
    match spec {
        None => Ok(TaskId::ALL.to_vec()),
        Some(spec) => spec
            .split(',')
            .map(|part| part.trim().parse::<TaskId>().map_err(|e| anyhow!(e)))
            .collect(),
    }
}

fn prompt_config(mode: &str, offset: i8) -> Result<PromptConfig> {
    match mode {
        "zeroshot" | "zero-shot" | "zero_shot" => Ok(PromptConfig::zero_shot()),
        "fewshot" | "few-shot" | "few_shot" => Ok(PromptConfig::few_shot(offset)?),
        other => bail!("unknown mode `{other}` (expected zeroshot or fewshot)"),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    benchmark_dir: &Path,
    config_path: Option<&Path>,
    records_path: &Path,
    mode: &str,
    offset: i8,
    tasks: Option<&str>,
    model_id_override: Option<String>,
    quiet: bool,
) -> Result<()> {
    let config_path =
        config_path.ok_or_else(|| anyhow!("run requires --config with a [model] section"))?;
    let config_text = fs::read_to_string(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let config = parse_flat_config(&config_text);
    let model_section = config
        .get("model")
        .ok_or_else(|| anyhow!("config has no [model] section"))?;

    let benchmark = synth::load_benchmark(benchmark_dir)
        .with_context(|| format!("loading benchmark {}", benchmark_dir.display()))?;
    let tasks = parse_tasks(tasks)?;
    let prompt_config = prompt_config(mode, offset)?;

    let (client, config_model_id) = client_from_config(model_section, &benchmark)?;
    let model_id = model_id_override.unwrap_or(config_model_id);

    let mut opts = RunOptions::new(model_id, prompt_config);
    if let Some(runner) = config.get("runner") {
        if let Some(workers) = runner.get("workers") {
            opts.workers = workers.parse().context("bad workers value")?;
        }
        if let Some(retries) = runner.get("transport_retries") {
            opts.transport_retries = retries.parse().context("bad transport_retries value")?;
        }
    }

    let (existing, issues) = if records_path.exists() {
        harness::load_records(records_path)?
    } else {
        (Vec::new(), Vec::new())
    };
    for issue in &issues {
        eprintln!("warning: {}:{}: {}", records_path.display(), issue.line, issue.message);
    }

    let mut writer = RecordsWriter::append(records_path)?;
    let outcome = harness::run_evaluation(
        client.as_ref(),
        &benchmark,
        &tasks,
        &opts,
        &existing,
        &mut |record| writer.write(record),
    )?;

    if !quiet {
        if !outcome.skipped_offset.is_empty() {
            println!(
                "skipped {} questions whose example level would leave the ladder (offset {})",
                outcome.skipped_offset.len(),
                opts.config.offset
            );
        }
        if outcome.resumed > 0 {
            println!("resumed past {} already-recorded questions", outcome.resumed);
        }
        let mut all: Vec<EvaluationRecord> = existing;
        all.extend(outcome.records.iter().cloned());
        all.retain(|r| r.model_id == opts.model_id && r.config.key() == opts.config.key());
        if !all.is_empty() {
            let report = harness::report(&all)?;
            print!("{}", report.text_table());
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct AnswerLine {
    instance_id: String,
    final_answer: String,
}

#[derive(Debug, Serialize)]
struct OutcomeLine<'a> {
    instance_id: &'a str,
    #[serde(flatten)]
    outcome: &'a VerificationOutcome,
}

#[derive(Debug, Serialize)]
struct ErrorLine<'a> {
    instance_id: &'a str,
    error: String,
}

fn cmd_verify(benchmark_dir: &Path, answers_path: &Path, out: &Path, quiet: bool) -> Result<()> {
    let benchmark = synth::load_benchmark(benchmark_dir)
        .with_context(|| format!("loading benchmark {}", benchmark_dir.display()))?;
    let index: HashMap<&str, &ProblemInstance> = benchmark
        .instances
        .iter()
        .map(|inst| (inst.instance_id.as_str(), inst))
        .collect();
    let text = fs::read_to_string(answers_path)
        .with_context(|| format!("reading answers {}", answers_path.display()))?;

    let mut out_file = fs::File::create(out)?;
    use std::io::Write as _;
    let mut judged = 0usize;
    let mut errors = 0usize;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let answer: AnswerLine = match serde_json::from_str(line) {
            Ok(answer) => answer,
            Err(e) => {
                eprintln!("warning: {}:{}: {e}", answers_path.display(), i + 1);
                errors += 1;
                continue;
            }
        };
        let Some(instance) = index.get(answer.instance_id.as_str()) else {
            let line = ErrorLine {
                instance_id: &answer.instance_id,
                error: "unknown instance id".into(),
            };
            writeln!(out_file, "{}", serde_json::to_string(&line)?)?;
            errors += 1;
            continue;
        };
        let wrapped = format!("<final_answer>{}</final_answer>", answer.final_answer);
        let outcome = match parse_response(instance.task, &wrapped) {
            Ok(parsed) => {
                let oracle = oracles::solve(instance)?;
                verify(instance, &parsed, &oracle)
            }
            Err(e) => VerificationOutcome::parse_failure(e.to_string()),
        };
        let line = OutcomeLine { instance_id: &answer.instance_id, outcome: &outcome };
        writeln!(out_file, "{}", serde_json::to_string(&line)?)?;
        judged += 1;
    }
    if !quiet {
        println!("judged {judged} answers ({errors} reported errors) -> {}", out.display());
    }
    Ok(())
}

fn cmd_report(
    records_paths: &[PathBuf],
    out: &Path,
    pairing: PairingUnit,
    quiet: bool,
) -> Result<()> {
    if records_paths.is_empty() {
        bail!("report needs at least one records file");
    }
    let mut records = Vec::new();
    let mut readable = 0;
    for path in records_paths {
        match harness::load_records(path) {
            Ok((mut loaded, issues)) => {
                for issue in issues {
                    eprintln!("warning: {}:{}: {}", path.display(), issue.line, issue.message);
                }
                records.append(&mut loaded);
                readable += 1;
            }
            Err(e) => eprintln!("warning: skipping {}: {e}", path.display()),
        }
    }
    if readable == 0 {
        bail!("no readable records files");
    }
    let report = harness::report_with_pairing(&records, pairing)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("wa_fr_by_task.csv"), report.task_csv())?;
    fs::write(out.join("wa_fr_by_class.csv"), report.class_csv())?;
    fs::write(out.join("accuracy_by_level.csv"), report.level_csv())?;
    fs::write(out.join("wilcoxon_by_class.csv"), report.wilcoxon_csv())?;
    fs::write(out.join("report.txt"), report.text_table())?;
    if !quiet {
        print!("{}", report.text_table());
        println!("tables written to {}", out.display());
    }
    Ok(())
}
