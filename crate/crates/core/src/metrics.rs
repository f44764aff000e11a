//! Weighted Accuracy, Failure Rate, the paired Wilcoxon signed-rank test,
//! and report table emission.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::domain::{ComplexityClass, TaskId};

/// Sum of the level weights 1 + 2 + ... + 10.
pub const WEIGHT_SUM: f64 = 55.0;
/// Questions per full (task, level-range) pool: 10 levels x 10 questions.
pub const POOL_SIZE: f64 = 100.0;
/// Exact Wilcoxon p-values are computed up to this many effective pairs.
pub const EXACT_WILCOXON_LIMIT: usize = 20;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("all paired differences are zero")]
    DegenerateSample,
    #[error("paired samples differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty sample")]
    EmptySample,
    #[error("{0}")]
    OutOfRange(String),
}

/// Per-level accuracies A1..A10, each in [0, 1]; level i carries weight i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelAccuracyVector([f64; 10]);

impl LevelAccuracyVector {
    pub fn new(values: [f64; 10]) -> Result<Self, MetricsError> {
        for (i, v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(MetricsError::OutOfRange(format!(
                    "accuracy {v} at level {} outside [0, 1]",
                    i + 1
                )));
            }
        }
        Ok(LevelAccuracyVector(values))
    }

    pub fn values(&self) -> &[f64; 10] {
        &self.0
    }
}

/// Per-level failed-question counts F1..F10, each out of 10 questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelFailureVector([u32; 10]);

impl LevelFailureVector {
    pub fn new(values: [u32; 10]) -> Result<Self, MetricsError> {
        for (i, v) in values.iter().enumerate() {
            if *v > 10 {
                return Err(MetricsError::OutOfRange(format!(
                    "{v} failures at level {} exceed the 10 questions",
                    i + 1
                )));
            }
        }
        Ok(LevelFailureVector(values))
    }

    pub fn values(&self) -> &[u32; 10] {
        &self.0
    }
}

/// WA = sum(i * A_i) / 55.
pub fn weighted_accuracy(accuracies: &LevelAccuracyVector) -> f64 {
    let weighted: f64 = accuracies
        .values()
        .iter()
        .enumerate()
        .map(|(i, a)| (i + 1) as f64 * a)
        .sum();
    weighted / WEIGHT_SUM
}

/// FR = sum(F_i) / 100.
pub fn failure_rate(failures: &LevelFailureVector) -> f64 {
    let total: u32 = failures.values().iter().sum();
    total as f64 / POOL_SIZE
}

/// Weighted accuracy over the levels actually present in a run (offset runs
/// skip levels). Weights are the level numbers; a full run reduces to the
/// standard /55 formula.
pub fn weighted_accuracy_over(levels: &[(u8, f64)]) -> f64 {
    let weight_sum: f64 = levels.iter().map(|(l, _)| *l as f64).sum();
    if weight_sum == 0.0 {
        return 0.0;
    }
    let weighted: f64 = levels.iter().map(|(l, a)| *l as f64 * a).sum();
    weighted / weight_sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonOutcome {
    /// Sum of ranks of positive differences (W+).
    pub statistic: f64,
    pub p_value: f64,
    pub effective_pairs: usize,
    pub method: WilcoxonMethod,
}

fn average_ranks(sorted_abs: &[f64]) -> Vec<f64> {
    // Input is sorted; ties share the average of their rank positions.
    let n = sorted_abs.len();
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted_abs[j + 1] == sorted_abs[i] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for rank in ranks.iter_mut().take(j + 1).skip(i) {
            *rank = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped and tied ranks averaged. Up to 20 effective pairs the p-value
/// is exact over all sign assignments; beyond that a normal approximation
/// with continuity correction is used.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonOutcome, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(MetricsError::DegenerateSample);
    }
    let m = diffs.len();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| diffs[a].abs().partial_cmp(&diffs[b].abs()).expect("finite"));
    let sorted_abs: Vec<f64> = order.iter().map(|&i| diffs[i].abs()).collect();
    let rank_of_sorted = average_ranks(&sorted_abs);
    let mut ranks = vec![0.0; m];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = rank_of_sorted[pos];
    }

    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();

    let p_value = if m <= EXACT_WILCOXON_LIMIT {
        exact_two_sided_p(&ranks, w_plus)
    } else {
        approx_two_sided_p(&ranks, w_plus)
    };
    Ok(WilcoxonOutcome {
        statistic: w_plus,
        p_value,
        effective_pairs: m,
        method: if m <= EXACT_WILCOXON_LIMIT {
            WilcoxonMethod::Exact
        } else {
            WilcoxonMethod::NormalApprox
        },
    })
}

/// Exact null distribution of W+ over all 2^m sign assignments. Ranks are
/// halves at worst, so doubling them makes every achievable statistic an
/// integer index.
fn exact_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for t in (r..=total).rev() {
            counts[t] += counts[t - r];
        }
    }
    let assignments = 2f64.powi(ranks.len() as i32);
    let observed = (w_plus * 2.0).round() as usize;
    let le: f64 = counts[..=observed].iter().sum();
    let ge: f64 = counts[observed..].iter().sum();
    (2.0 * le.min(ge) / assignments).min(1.0)
}

fn approx_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let m = ranks.len() as f64;
    let mean = m * (m + 1.0) / 4.0;
    let mut variance = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0;
    // Tie correction: subtract sum(t^3 - t)/48 over tie groups.
    let mut tie_counts: BTreeMap<u64, f64> = BTreeMap::new();
    for r in ranks {
        *tie_counts.entry((r * 2.0).round() as u64).or_insert(0.0) += 1.0;
    }
    for t in tie_counts.values() {
        variance -= (t * t * t - t) / 48.0;
    }
    if variance <= 0.0 {
        return 1.0;
    }
    let delta = w_plus - mean;
    let correction = 0.5 * delta.signum();
    let z = (delta - correction) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - normal.cdf(z.abs()))).clamp(f64::MIN_POSITIVE, 1.0)
}

// ---------------------------------------------------------------------------
// Report tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub model_id: String,
    pub task: TaskId,
    pub class: ComplexityClass,
    pub weighted_accuracy: f64,
    pub failure_rate: f64,
    pub questions: usize,
    pub parse_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub model_id: String,
    pub class: ComplexityClass,
    pub weighted_accuracy: f64,
    pub failure_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub model_id: String,
    pub task: TaskId,
    pub level: u8,
    pub accuracy: f64,
    pub failures: usize,
    pub questions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonRow {
    pub model_id: String,
    pub class_a: ComplexityClass,
    pub class_b: ComplexityClass,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub pairs: usize,
    pub note: String,
}

/// Aggregated evaluation report: per-task and per-class WA/FR, per-level
/// accuracy matrix, and pairwise class comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub task_rows: Vec<TaskRow>,
    pub class_rows: Vec<ClassRow>,
    pub level_rows: Vec<LevelRow>,
    pub wilcoxon_rows: Vec<WilcoxonRow>,
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

impl Report {
    pub fn task_csv(&self) -> String {
        let mut out = String::from("model_id,task,class,weighted_accuracy,failure_rate,questions,parse_failures\n");
        for row in &self.task_rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.model_id,
                row.task,
                row.class,
                fmt6(row.weighted_accuracy),
                fmt6(row.failure_rate),
                row.questions,
                row.parse_failures
            ));
        }
        out
    }

    pub fn class_csv(&self) -> String {
        let mut out = String::from("model_id,class,weighted_accuracy,failure_rate\n");
        for row in &self.class_rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.model_id,
                row.class,
                fmt6(row.weighted_accuracy),
                fmt6(row.failure_rate)
            ));
        }
        out
    }

    /// Long-form per-level accuracies, one row per (model, task, level);
    /// ready for heatmap pivoting.
    pub fn level_csv(&self) -> String {
        let mut out = String::from("model_id,task,level,accuracy,failures,questions\n");
        for row in &self.level_rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.model_id,
                row.task,
                row.level,
                fmt6(row.accuracy),
                row.failures,
                row.questions
            ));
        }
        out
    }

    pub fn wilcoxon_csv(&self) -> String {
        let mut out = String::from("model_id,class_a,class_b,statistic,p_value,pairs,note\n");
        for row in &self.wilcoxon_rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.model_id,
                row.class_a,
                row.class_b,
                row.statistic.map(fmt6).unwrap_or_default(),
                row.p_value.map(fmt6).unwrap_or_default(),
                row.pairs,
                row.note
            ));
        }
        out
    }

    /// Aligned plain-text WA/FR table.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<24} {:<8} {:<12} {:>10} {:>10}\n",
            "model", "task", "class", "WA", "FR"
        ));
        out.push_str(&format!("{}\n", "-".repeat(68)));
        for row in &self.task_rows {
            out.push_str(&format!(
                "{:<24} {:<8} {:<12} {:>10.4} {:>10.4}\n",
                row.model_id,
                row.task.to_string(),
                row.class.to_string(),
                row.weighted_accuracy,
                row.failure_rate
            ));
        }
        if !self.class_rows.is_empty() {
            out.push('\n');
            out.push_str(&format!(
                "{:<24} {:<12} {:>10} {:>10}\n",
                "model", "class", "WA", "FR"
            ));
            out.push_str(&format!("{}\n", "-".repeat(59)));
            for row in &self.class_rows {
                out.push_str(&format!(
                    "{:<24} {:<12} {:>10.4} {:>10.4}\n",
                    row.model_id,
                    row.class.to_string(),
                    row.weighted_accuracy,
                    row.failure_rate
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn vector(values: [f64; 10]) -> LevelAccuracyVector {
        LevelAccuracyVector::new(values).unwrap()
    }

    #[test]
    fn weighted_accuracy_formula() {
        assert_eq!(weighted_accuracy(&vector([1.0; 10])), 1.0);
        assert_eq!(weighted_accuracy(&vector([0.0; 10])), 0.0);
        let mut top_only = [0.0; 10];
        top_only[9] = 1.0;
        assert!((weighted_accuracy(&vector(top_only)) - 10.0 / 55.0).abs() < 1e-12);
    }

    #[test]
    fn failure_rate_formula() {
        assert_eq!(failure_rate(&LevelFailureVector::new([10; 10]).unwrap()), 1.0);
        assert_eq!(failure_rate(&LevelFailureVector::new([0; 10]).unwrap()), 0.0);
        let mut first_only = [0; 10];
        first_only[0] = 10;
        assert!((failure_rate(&LevelFailureVector::new(first_only).unwrap()) - 0.1).abs() < 1e-12);
        assert!(LevelFailureVector::new([11, 0, 0, 0, 0, 0, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn pooled_failure_rate_is_mean_of_equal_pools() {
        let a = LevelFailureVector::new([1; 10]).unwrap();
        let b = LevelFailureVector::new([3; 10]).unwrap();
        let pooled: u32 =
            a.values().iter().sum::<u32>() + b.values().iter().sum::<u32>();
        let pooled_rate = pooled as f64 / (2.0 * POOL_SIZE);
        let mean = (failure_rate(&a) + failure_rate(&b)) / 2.0;
        assert!((pooled_rate - mean).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_are_degenerate() {
        let x = [0.4, 0.5, 0.6];
        assert!(matches!(
            wilcoxon_signed_rank(&x, &x),
            Err(MetricsError::DegenerateSample)
        ));
    }

    #[test]
    fn swapping_samples_mirrors_the_statistic() {
        let x = [0.9, 0.8, 0.75, 0.6, 0.5, 0.45];
        let y = [0.5, 0.6, 0.8, 0.3, 0.2, 0.5];
        let ab = wilcoxon_signed_rank(&x, &y).unwrap();
        let ba = wilcoxon_signed_rank(&y, &x).unwrap();
        assert_eq!(ab.p_value, ba.p_value);
        let m = ab.effective_pairs as f64;
        assert!((ab.statistic + ba.statistic - m * (m + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn exact_and_approximate_agree_at_the_boundary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let x: Vec<f64> = (0..EXACT_WILCOXON_LIMIT).map(|_| rng.random_range(0.0..1.0)).collect();
            let y: Vec<f64> = (0..EXACT_WILCOXON_LIMIT).map(|_| rng.random_range(0.0..1.0)).collect();
            let outcome = wilcoxon_signed_rank(&x, &y).unwrap();
            let ranks: Vec<f64> = (1..=outcome.effective_pairs).map(|r| r as f64).collect();
            // No ties occur with continuous draws, so ranks are 1..=m.
            let approx = approx_two_sided_p(&ranks, outcome.statistic);
            assert!(
                (outcome.p_value - approx).abs() <= 0.01,
                "exact {} vs approx {approx}",
                outcome.p_value
            );
        }
    }

    #[test]
    fn p_values_stay_in_unit_interval() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for m in [1usize, 2, 5, 12, 20, 25, 40] {
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
            let outcome = wilcoxon_signed_rank(&x, &y).unwrap();
            assert!(outcome.p_value > 0.0 && outcome.p_value <= 1.0, "m={m}");
        }
    }

    proptest! {
        #[test]
        fn weighted_accuracy_of_uniform_vector_is_the_constant(a in 0.0f64..=1.0) {
            let wa = weighted_accuracy(&vector([a; 10]));
            prop_assert!((wa - a).abs() < 1e-12);
        }

        #[test]
        fn weighted_accuracy_is_monotone(
            values in proptest::array::uniform10(0.0f64..=1.0),
            level in 0usize..10,
            bump in 0.0f64..=1.0,
        ) {
            let base = weighted_accuracy(&vector(values));
            let mut raised = values;
            raised[level] = (raised[level] + bump).min(1.0);
            let after = weighted_accuracy(&vector(raised));
            prop_assert!(after + 1e-12 >= base);
        }
    }
}
