//! One-sample marginal statistics: weighted mean, weighted variance and a
//! Pearson chi-square against the analytic marginal.

use crate::error::{Error, Result};
use crate::store::SampleBatch;
use crate::targets::TargetSpec;

pub const DEFAULT_CHI_SQUARE_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue {
    pub name: String,
    pub component: Option<usize>,
    pub value: f64,
}

impl MetricValue {
    fn component(metric: &str, j: usize, value: f64) -> Self {
        Self {
            name: format!("{metric}[{j}]"),
            component: Some(j),
            value,
        }
    }
}

pub(crate) fn weighted_means(batch: &SampleBatch) -> Vec<f64> {
    let d = batch.dim();
    let mut acc = vec![0.0; d];
    let total = batch.total_weight();
    for (i, row) in batch.rows().enumerate() {
        let w = batch.weight(i);
        for (a, x) in acc.iter_mut().zip(row) {
            *a += w * x;
        }
    }
    acc.iter_mut().for_each(|a| *a /= total);
    acc
}

pub fn marginal_mean(batch: &SampleBatch) -> Vec<MetricValue> {
    weighted_means(batch)
        .into_iter()
        .enumerate()
        .map(|(j, v)| MetricValue::component("marginal_mean", j, v))
        .collect()
}

/// Weighted population variance `Σw(x−x̄)²/Σw` per dimension.
pub fn marginal_variance(batch: &SampleBatch) -> Result<Vec<MetricValue>> {
    if batch.len() < 2 {
        return Err(Error::Degenerate("variance needs at least two points".into()));
    }
    let means = weighted_means(batch);
    let total = batch.total_weight();
    let mut acc = vec![0.0; batch.dim()];
    for (i, row) in batch.rows().enumerate() {
        let w = batch.weight(i);
        for ((a, x), m) in acc.iter_mut().zip(row).zip(&means) {
            *a += w * (x - m) * (x - m);
        }
    }
    Ok(acc
        .into_iter()
        .enumerate()
        .map(|(j, v)| MetricValue::component("marginal_variance", j, v / total))
        .collect())
}

/// Interior edges of `bins` equal-probability bins of the target marginal.
pub fn quantile_edges(target: &TargetSpec, dim: usize, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::param("chi-square needs at least one bin"));
    }
    (1..bins)
        .map(|b| target.marginal_quantile(dim, b as f64 / bins as f64))
        .collect()
}

/// Sum that depends only on the multiset of inputs, not their order.
fn order_free_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}

/// Pearson statistic over equal-probability bins, with observed weight sums
/// rescaled so that they total the batch's effective sample size.
pub fn chi_square_marginal(
    batch: &SampleBatch,
    target: &TargetSpec,
    bins: usize,
) -> Result<Vec<MetricValue>> {
    if !target.has_analytic_marginals() {
        return Err(Error::UnsupportedMetric {
            metric: "chi_square".into(),
            target: target.name().to_owned(),
        });
    }
    if batch.dim() != target.dim() {
        return Err(Error::param(format!(
            "batch dimension {} does not match target dimension {}",
            batch.dim(),
            target.dim()
        )));
    }
    let (total, ess) = match batch.weights() {
        None => (batch.len() as f64, batch.len() as f64),
        Some(w) => {
            let total = order_free_sum(&mut w.to_vec());
            let sum_sq = order_free_sum(&mut w.iter().map(|x| x * x).collect::<Vec<_>>());
            (total, total * total / sum_sq)
        }
    };
    let scale = ess / total;
    let expected = ess / bins as f64;

    (0..batch.dim())
        .map(|j| {
            let edges = quantile_edges(target, j, bins)?;
            let mut per_bin: Vec<Vec<f64>> = vec![Vec::new(); bins];
            for (i, row) in batch.rows().enumerate() {
                let b = edges.partition_point(|e| *e <= row[j]);
                per_bin[b].push(batch.weight(i));
            }
            let stat: f64 = per_bin
                .iter_mut()
                .map(|ws| {
                    let observed = order_free_sum(ws) * scale;
                    (observed - expected).powi(2) / expected
                })
                .sum();
            Ok(MetricValue::component("chi_square", j, stat))
        })
        .collect()
}
