//! Builds per-batch distributions of every metric for IID reference draws
//! and for user samples, then scores the user distributions against the
//! reference in units of the reference standard deviation.
//!
//! Every random stream is derived with [`seed::child_seed`] from the master
//! seed, the batch index and a role tag, and batch results are collected by
//! index, so output does not depend on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Arity, Metric};
use crate::seed::child_seed;
use crate::store::{self, SampleBatch};
use crate::targets::TargetSpec;

/// Reference standard deviations below this are treated as zero.
pub const DEGENERATE_STD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "iid-reference")]
    IidReference,
    #[serde(rename = "user")]
    User,
}

/// Distribution of one metric output over `m` batches.
#[derive(Debug, Clone, PartialEq)]
pub struct TestStatistic {
    pub testcase: String,
    pub metric: String,
    pub arity: Arity,
    pub role: Role,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (m − 1 denominator).
    pub std: f64,
    /// Kernel bandwidth used per batch, for MMD with the median heuristic.
    pub bandwidths: Option<Vec<f64>>,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

impl TestStatistic {
    pub fn new(testcase: &str, metric: &str, arity: Arity, role: Role, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::param(format!(
                "test statistic `{metric}` needs at least two batches, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!("metric `{metric}` produced non-finite value {v}")));
        }
        let (mean, std) = mean_std(&values);
        Ok(Self {
            testcase: testcase.to_owned(),
            metric: metric.to_owned(),
            arity,
            role,
            values,
            mean,
            std,
            bandwidths: None,
        })
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }
}

/// Per-batch outputs of every metric, in metric-then-component order.
struct BatchResult {
    values: Vec<f64>,
    bandwidths: Vec<Option<f64>>,
}

fn validate_request(target: &TargetSpec, metrics: &[Metric], m: usize, n: usize) -> Result<()> {
    if metrics.is_empty() {
        return Err(Error::param("at least one metric is required"));
    }
    if m < 2 || n < 2 {
        return Err(Error::param(format!("need m >= 2 batches of n >= 2 samples, got m={m}, n={n}")));
    }
    for metric in metrics {
        metric.validate()?;
        metric.check_supported(target)?;
    }
    Ok(())
}

fn metric_seed(master: u64, batch: usize, metric_index: usize) -> u64 {
    child_seed(master, batch as u64, &format!("metric-{metric_index}"))
}

/// Evaluates all metrics on one batch. `one` is the batch seen by one-sample
/// metrics; `pair` produces the two sets compared by two-sample metrics.
fn evaluate_batch(
    target: &TargetSpec,
    metrics: &[Metric],
    master: u64,
    index: usize,
    one: &SampleBatch,
    pair: impl FnOnce() -> Result<(SampleBatch, SampleBatch)>,
) -> Result<BatchResult> {
    let mut values = Vec::new();
    let mut bandwidths = Vec::new();
    let mut pair = Some(pair);
    let mut two: Option<(SampleBatch, SampleBatch)> = None;
    for (k, metric) in metrics.iter().enumerate() {
        match metric.arity() {
            Arity::OneSample => {
                let v = metric.evaluate_one(one, target)?;
                bandwidths.extend(std::iter::repeat_n(None, v.len()));
                values.extend(v);
            }
            Arity::TwoSample => {
                if two.is_none() {
                    two = Some((pair.take().expect("pair built once"))()?);
                }
                let (x, y) = two.as_ref().expect("pair present");
                let out = metric.evaluate_two(x, y, metric_seed(master, index, k))?;
                values.push(out.value);
                bandwidths.push(out.bandwidth);
            }
        }
    }
    Ok(BatchResult { values, bandwidths })
}

fn assemble(
    target: &TargetSpec,
    metrics: &[Metric],
    role: Role,
    results: Vec<BatchResult>,
) -> Result<Vec<TestStatistic>> {
    let descriptors: Vec<_> = metrics.iter().flat_map(|m| m.descriptors(target.dim())).collect();
    descriptors
        .iter()
        .enumerate()
        .map(|(col, d)| {
            let values = results.iter().map(|r| r.values[col]).collect();
            let mut stat = TestStatistic::new(target.name(), &d.name, d.arity, role, values)?;
            if results[0].bandwidths[col].is_some() {
                stat.bandwidths = Some(results.iter().map(|r| r.bandwidths[col].unwrap_or(f64::NAN)).collect());
            }
            Ok(stat)
        })
        .collect()
}

/// Reference distributions from fresh IID draws: one batch per index for
/// one-sample metrics and an independent pair per index for two-sample
/// metrics.
pub fn build_teststatistic_iid(
    target: &TargetSpec,
    metrics: &[Metric],
    m: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<TestStatistic>> {
    validate_request(target, metrics, m, n)?;
    let results = (0..m)
        .into_par_iter()
        .map(|i| {
            let a = target.sample_iid(n, child_seed(seed, i as u64, "iid-a"))?;
            let a2 = a.clone();
            evaluate_batch(target, metrics, seed, i, &a, move || {
                let b = target.sample_iid(n, child_seed(seed, i as u64, "iid-b"))?;
                Ok((a2, b))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(target, metrics, Role::IidReference, results)
}

/// User distributions: the user batch is cut into `m` contiguous chunks of
/// `n` effective samples. One-sample metrics see each (weighted) chunk;
/// two-sample metrics compare a fresh IID batch against the chunk
/// resampled to `n` unweighted points.
pub fn build_teststatistic_user(
    target: &TargetSpec,
    metrics: &[Metric],
    m: usize,
    n: usize,
    user: &SampleBatch,
    seed: u64,
) -> Result<Vec<TestStatistic>> {
    validate_request(target, metrics, m, n)?;
    if user.dim() != target.dim() {
        return Err(Error::param(format!(
            "user samples have dimension {}, test case `{}` has {}",
            user.dim(),
            target.name(),
            target.dim()
        )));
    }
    let chunks = store::partition(user, m, n)?;
    let results = chunks
        .par_iter()
        .enumerate()
        .map(|(i, chunk)| {
            evaluate_batch(target, metrics, seed, i, chunk, || {
                let reference = target.sample_iid(n, child_seed(seed, i as u64, "user-iid"))?;
                let resampled = store::weighted_resample(chunk, n, child_seed(seed, i as u64, "resample"))?;
                Ok((reference, resampled))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(target, metrics, Role::User, results)
}

/// `(value − mean)/std`, or the raw difference flagged as degenerate when the
/// reference spread is zero.
pub fn normalize(value: f64, ref_mean: f64, ref_std: f64) -> (f64, bool) {
    if ref_std < DEGENERATE_STD {
        (value - ref_mean, true)
    } else {
        ((value - ref_mean) / ref_std, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Band {
    #[serde(rename = "1σ")]
    One,
    #[serde(rename = "2σ")]
    Two,
    #[serde(rename = "3σ")]
    Three,
    #[serde(rename = ">3σ")]
    Beyond,
}

impl Band {
    /// Closed upper bounds at 1, 2 and 3.
    pub fn classify(z: f64) -> Self {
        let a = z.abs();
        if a <= 1.0 {
            Band::One
        } else if a <= 2.0 {
            Band::Two
        } else if a <= 3.0 {
            Band::Three
        } else {
            Band::Beyond
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Band::One => "1σ",
            Band::Two => "2σ",
            Band::Three => "3σ",
            Band::Beyond => ">3σ",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub metric: String,
    pub z: f64,
    pub std_ratio: f64,
    pub band: Band,
    pub ref_mean: f64,
    pub ref_std: f64,
    pub user_mean: f64,
    pub user_std: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonSummary {
    pub entries: Vec<ComparisonEntry>,
}

impl ComparisonSummary {
    pub fn worst_band(&self) -> Option<Band> {
        self.entries.iter().map(|e| e.band).max()
    }

    /// True when no metric lies beyond three reference standard deviations.
    pub fn passes(&self) -> bool {
        self.entries.iter().all(|e| e.band != Band::Beyond)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max)
    }

    pub fn get(&self, metric: &str) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.metric == metric)
    }
}

pub fn compare(reference: &[TestStatistic], user: &[TestStatistic]) -> Result<ComparisonSummary> {
    if reference.len() != user.len() {
        return Err(Error::param(format!(
            "reference has {} statistics, user has {}",
            reference.len(),
            user.len()
        )));
    }
    let entries = reference
        .iter()
        .map(|r| {
            let u = user
                .iter()
                .find(|u| u.metric == r.metric)
                .ok_or_else(|| Error::param(format!("user statistics lack metric `{}`", r.metric)))?;
            let (z, degenerate) = normalize(u.mean, r.mean, r.std);
            let std_ratio = if degenerate { u.std } else { u.std / r.std };
            Ok(ComparisonEntry {
                metric: r.metric.clone(),
                z,
                std_ratio,
                band: Band::classify(z),
                ref_mean: r.mean,
                ref_std: r.std,
                user_mean: u.mean,
                user_std: u.std,
                degenerate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonSummary { entries })
}
