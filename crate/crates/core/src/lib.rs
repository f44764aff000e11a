//! A benchmark engine for combinatorial reasoning: deterministically
//! synthesizes instances of nine problems spanning P, NP-complete, and
//! NP-hard classes at ten difficulty levels, solves them with exact oracles,
//! evaluates free-form model answers against those oracles, and scores runs
//! with weighted accuracy and failure rate.
//!
//! Module map:
//! - [`domain`]: tasks, complexity classes, instances, answers, codecs.
//! - [`synth`]: difficulty ladders and seeded instance generation.
//! - [`oracles`]: exact solvers for all nine tasks.
//! - [`verify`]: judging parsed answers against oracle solutions.
//! - [`promptio`]: prompt rendering and tagged-response parsing.
//! - [`metrics`]: weighted accuracy, failure rate, Wilcoxon signed-rank.
//! - [`harness`]: model clients, the evaluation runner, records, reports.
//! - [`cli`]: the generate/run/verify/report subcommands.

pub mod cli;
pub mod domain;
pub mod harness;
pub mod metrics;
pub mod oracles;
pub mod promptio;
pub mod synth;
pub mod verify;

pub use domain::{
    AnswerClaim, ComplexityClass, DifficultyLevel, OracleSolution, ParsedAnswer, Payload,
    ProblemInstance, TaskId, WeightedGraph,
};
pub use synth::BenchmarkSet;
pub use verify::{Status, VerificationOutcome};
