//! Python bindings: instance synthesis, codecs, exact solving, prompt
//! rendering, answer verification, and the run metrics.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use combench::domain::codec;
use combench::metrics;
use combench::promptio;
use combench::synth;
use combench::{oracles, DifficultyLevel, OracleSolution, ProblemInstance, TaskId};

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn parse_task(task: &str) -> PyResult<TaskId> {
    task.parse::<TaskId>().map_err(value_err)
}

fn parse_level(level: u8) -> PyResult<DifficultyLevel> {
    DifficultyLevel::extended(level).map_err(value_err)
}

fn solution_dict<'py>(py: Python<'py>, solution: &OracleSolution) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    match solution {
        OracleSolution::Sas { index } => {
            dict.set_item("kind", "sas")?;
            dict.set_item("index", *index)?;
        }
        OracleSolution::Edp { distance } => {
            dict.set_item("kind", "edp")?;
            dict.set_item("distance", *distance)?;
        }
        OracleSolution::Spp { path, total_weight } => {
            dict.set_item("kind", "spp")?;
            dict.set_item("path", path.clone())?;
            dict.set_item("total_weight", *total_weight)?;
        }
        OracleSolution::TspD { feasible } => {
            dict.set_item("kind", "tsp_d")?;
            dict.set_item("feasible", *feasible)?;
        }
        OracleSolution::GcpD { colorable } => {
            dict.set_item("kind", "gcp_d")?;
            dict.set_item("feasible", *colorable)?;
        }
        OracleSolution::Ksp { selection, value } => {
            dict.set_item("kind", "ksp")?;
            dict.set_item("selection", selection.clone())?;
            dict.set_item("value", *value)?;
        }
        OracleSolution::Tsp { tour, cost } => {
            dict.set_item("kind", "tsp")?;
            dict.set_item("tour", tour.clone())?;
            dict.set_item("cost", *cost)?;
        }
        OracleSolution::Gcp { chromatic_number, coloring } => {
            dict.set_item("kind", "gcp")?;
            dict.set_item("chromatic_number", *chromatic_number)?;
            dict.set_item("coloring", coloring.clone())?;
        }
        OracleSolution::Msp { assignment, participation } => {
            dict.set_item("kind", "msp")?;
            dict.set_item("assignment", assignment.clone())?;
            dict.set_item("participation", *participation)?;
        }
    }
    Ok(dict)
}

/// One benchmark question.
#[pyclass(name = "Instance", skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: ProblemInstance,
}

#[pymethods]
impl PyInstance {
    #[getter]
    fn instance_id(&self) -> String {
        self.inner.instance_id.clone()
    }

    #[getter]
    fn task(&self) -> String {
        self.inner.task.as_str().to_string()
    }

    #[getter]
    fn level(&self) -> u8 {
        self.inner.level.get()
    }

    #[getter]
    fn complexity_class(&self) -> String {
        self.inner.task.complexity_class().as_str().to_string()
    }

    /// Canonical serialized form (CSV row or JSON record).
    fn encode(&self) -> String {
        codec::encode_instance(&self.inner)
    }

    /// Human-readable problem body used inside prompts.
    fn render_text(&self) -> String {
        promptio::render_instance_text(&self.inner)
    }

    /// Full zero-shot prompt for this instance.
    fn zero_shot_prompt(&self) -> PyResult<String> {
        let empty = synth::BenchmarkSet {
            version_tag: String::new(),
            master_seed: 0,
            instances: Vec::new(),
        };
        let prompt = promptio::build_prompt(&self.inner, &promptio::PromptConfig::zero_shot(), &empty)
            .map_err(value_err)?;
        Ok(prompt.text)
    }

    /// Exact solution as a dict.
    fn solve<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let solution = oracles::solve(&self.inner).map_err(value_err)?;
        solution_dict(py, &solution)
    }

    /// The exact answer rendered in final-answer payload format.
    fn oracle_answer(&self) -> PyResult<String> {
        let solution = oracles::solve(&self.inner).map_err(value_err)?;
        Ok(promptio::render_final_answer(&solution))
    }

    /// Judges a raw model response (with `<final_answer>` tags) against the
    /// exact solution. Returns {"status", "detail", "quality"}.
    fn verify_response<'py>(
        &self,
        py: Python<'py>,
        response: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let outcome = match promptio::parse_response(self.inner.task, response) {
            Ok(parsed) => {
                let oracle = oracles::solve(&self.inner).map_err(value_err)?;
                combench::verify::verify(&self.inner, &parsed, &oracle)
            }
            Err(err) => combench::VerificationOutcome::parse_failure(err.to_string()),
        };
        let dict = PyDict::new(py);
        dict.set_item(
            "status",
            match outcome.status {
                combench::Status::Correct => "correct",
                combench::Status::Incorrect => "incorrect",
                combench::Status::ParseFailure => "parse_failure",
            },
        )?;
        dict.set_item("detail", outcome.detail)?;
        dict.set_item("quality", outcome.quality)?;
        Ok(dict)
    }

    fn __repr__(&self) -> String {
        format!("Instance({})", self.inner.instance_id)
    }
}

/// Deterministically generate one instance.
#[pyfunction]
#[pyo3(signature = (task, level, sequence, seed))]
fn synth_instance(task: &str, level: u8, sequence: u32, seed: u64) -> PyResult<PyInstance> {
    let task = parse_task(task)?;
    let level = parse_level(level)?;
    let inner = synth::synth_instance(task, level, sequence, seed).map_err(value_err)?;
    Ok(PyInstance { inner })
}

/// Decode a serialized instance (CSV row, JSON record, or edge-list block).
#[pyfunction]
fn decode_instance(text: &str, task: &str) -> PyResult<PyInstance> {
    let task = parse_task(task)?;
    let inner = codec::decode_instance(text, task).map_err(value_err)?;
    Ok(PyInstance { inner })
}

/// Build and persist a full benchmark version; returns the instance count.
#[pyfunction]
#[pyo3(signature = (out_dir, tag, seed, level_lo=1, level_hi=10))]
fn generate_benchmark(
    out_dir: &str,
    tag: &str,
    seed: u64,
    level_lo: u8,
    level_hi: u8,
) -> PyResult<usize> {
    let set = synth::build_benchmark_range(tag, seed, level_lo, level_hi).map_err(value_err)?;
    let dir = std::path::Path::new(out_dir).join(tag);
    synth::write_benchmark(&set, &dir).map_err(value_err)?;
    Ok(set.instances.len())
}

/// WA = sum(i * A_i) / 55 over exactly ten per-level accuracies.
#[pyfunction]
fn weighted_accuracy(accuracies: Vec<f64>) -> PyResult<f64> {
    let arr: [f64; 10] = accuracies
        .try_into()
        .map_err(|_| value_err("expected exactly 10 per-level accuracies"))?;
    let vector = metrics::LevelAccuracyVector::new(arr).map_err(value_err)?;
    Ok(metrics::weighted_accuracy(&vector))
}

/// FR = sum(F_i) / 100 over exactly ten per-level failure counts.
#[pyfunction]
fn failure_rate(failures: Vec<u32>) -> PyResult<f64> {
    let arr: [u32; 10] = failures
        .try_into()
        .map_err(|_| value_err("expected exactly 10 per-level failure counts"))?;
    let vector = metrics::LevelFailureVector::new(arr).map_err(value_err)?;
    Ok(metrics::failure_rate(&vector))
}

/// Two-sided Wilcoxon signed-rank test; returns (statistic, p_value).
#[pyfunction]
fn wilcoxon_signed_rank(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64)> {
    let outcome = metrics::wilcoxon_signed_rank(&x, &y).map_err(value_err)?;
    Ok((outcome.statistic, outcome.p_value))
}

/// The nine task names in canonical order.
#[pyfunction]
fn tasks() -> Vec<String> {
    TaskId::ALL.iter().map(|t| t.as_str().to_string()).collect()
}

#[pymodule]
fn combench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(synth_instance, m)?)?;
    m.add_function(wrap_pyfunction!(decode_instance, m)?)?;
    m.add_function(wrap_pyfunction!(generate_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(failure_rate, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon_signed_rank, m)?)?;
    m.add_function(wrap_pyfunction!(tasks, m)?)?;
    Ok(())
}
