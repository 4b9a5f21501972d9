//! Sample container, CSV ingestion, effective sample size, batching and
//! weighted resampling.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed;

/// A set of `n` points in `d` dimensions with optional per-point weights and
/// log-density values. Points are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    points: Vec<f64>,
    dim: usize,
    weights: Option<Vec<f64>>,
    logdensities: Option<Vec<f64>>,
    label: String,
}

impl SampleBatch {
    /// Builds a batch from a row-major buffer of `n * dim` coordinates.
    pub fn new(points: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("sample dimension must be at least 1"));
        }
        if points.is_empty() {
            return Err(Error::param("sample batch must contain at least one point"));
        }
        if points.len() % dim != 0 {
            return Err(Error::param(format!(
                "buffer of {} values is not a whole number of {dim}-dimensional rows",
                points.len()
            )));
        }
        Ok(Self {
            points,
            dim,
            weights: None,
            logdensities: None,
            label: String::new(),
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::param("sample batch must contain at least one point"))?;
        let mut points = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::param(format!(
                    "row {i} has dimension {}, expected {dim}",
                    row.len()
                )));
            }
            points.extend_from_slice(row);
        }
        Self::new(points, dim)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::param(format!(
                "{} weights for {} points",
                weights.len(),
                self.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::param(format!(
                "weight {} at index {i} is not a finite nonnegative number",
                weights[i]
            )));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::param("weights are all zero"));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn with_logdensities(mut self, logdensities: Vec<f64>) -> Result<Self> {
        if logdensities.len() != self.len() {
            return Err(Error::param(format!(
                "{} log-density values for {} points",
                logdensities.len(),
                self.len()
            )));
        }
        self.logdensities = Some(logdensities);
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Column `j` as an owned vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn logdensities(&self) -> Option<&[f64]> {
        self.logdensities.as_deref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    /// Weight of row `i`; 1 when the batch is unweighted.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn total_weight(&self) -> f64 {
        self.weights
            .as_ref()
            .map_or(self.len() as f64, |w| w.iter().sum())
    }

    /// Rows `start..end` as a new batch carrying the matching weights and
    /// log-densities.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::param(format!(
                "row range {start}..{end} is empty or exceeds {} rows",
                self.len()
            )));
        }
        let mut out = Self::new(self.points[start * self.dim..end * self.dim].to_vec(), self.dim)?
            .with_label(self.label.clone());
        if let Some(w) = &self.weights {
            let chunk = w[start..end].to_vec();
            // A chunk may carry only zero weights even though the parent does not.
            if chunk.iter().any(|&x| x > 0.0) {
                out = out.with_weights(chunk)?;
            } else {
                return Err(Error::Degenerate(format!(
                    "rows {start}..{end} carry zero total weight"
                )));
            }
        }
        if let Some(l) = &self.logdensities {
            out = out.with_logdensities(l[start..end].to_vec())?;
        }
        Ok(out)
    }

    /// Merges runs of consecutive identical rows into one row whose weight is
    /// the run's total weight. Applied to Markov chain output this turns
    /// repeated (rejected) states into multiplicity weights.
    pub fn collapse_repeats(&self) -> Self {
        let mut points = Vec::with_capacity(self.points.len());
        let mut weights: Vec<f64> = Vec::with_capacity(self.len());
        let mut logd: Vec<f64> = Vec::new();
        let mut prev: Option<&[f64]> = None;
        for (i, row) in self.rows().enumerate() {
            let w = self.weight(i);
            if prev == Some(row) {
                *weights.last_mut().expect("previous row exists") += w;
                continue;
            }
            points.extend_from_slice(row);
            weights.push(w);
            if let Some(l) = &self.logdensities {
                logd.push(l[i]);
            }
            prev = Some(row);
        }
        SampleBatch {
            points,
            dim: self.dim,
            weights: Some(weights),
            logdensities: self.logdensities.as_ref().map(|_| logd),
            label: self.label.clone(),
        }
    }
}

/// Effective sample size of a weight vector: `(Σw)² / Σw²`.
pub fn ess_of_weights(weights: &[f64]) -> Result<f64> {
    let (sum, sum_sq) = weights
        .iter()
        .fold((0.0, 0.0), |(s, q), &w| (s + w, q + w * w));
    if sum_sq == 0.0 {
        return Err(Error::param("effective sample size undefined: all weights are zero"));
    }
    Ok(sum * sum / sum_sq)
}

/// Weight-based effective sample size of a batch; `n` when unweighted.
pub fn ess(batch: &SampleBatch) -> f64 {
    match batch.weights() {
        None => batch.len() as f64,
        Some(w) => ess_of_weights(w).expect("batch weights are never all zero"),
    }
}

/// Reads a CSV file with header `x_1,…,x_d[,weight][,logpdf]`.
pub fn read_csv(path: impl AsRef<Path>) -> Result<SampleBatch> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header = reader.headers()?.clone();
    let mut coord_cols: Vec<(usize, usize)> = Vec::new();
    let mut weight_col = None;
    let mut logpdf_col = None;
    for (col, name) in header.iter().enumerate() {
        match name {
            "weight" => weight_col = Some(col),
            "logpdf" => logpdf_col = Some(col),
            other => {
                let idx = other
                    .strip_prefix("x_")
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|&i| i >= 1)
                    .ok_or_else(|| {
                        Error::format(Some(1), format!("unrecognised column `{other}`"))
                    })?;
                coord_cols.push((idx, col));
            }
        }
    }
    coord_cols.sort_unstable();
    if coord_cols.is_empty() {
        return Err(Error::format(Some(1), "no coordinate columns x_1..x_d"));
    }
    for (expect, (idx, _)) in (1..).zip(&coord_cols) {
        if *idx != expect {
            return Err(Error::format(
                Some(1),
                format!("coordinate column x_{expect} missing or duplicated"),
            ));
        }
    }
    let dim = coord_cols.len();

    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut logd = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Header is row 1.
        let row = i + 2;
        let record = record.map_err(|e| Error::format(Some(row), e.to_string()))?;
        if record.len() != header.len() {
            return Err(Error::format(
                Some(row),
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let cell = |col: usize| -> Result<f64> {
            let raw = &record[col];
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::format(Some(row), format!("non-numeric value `{raw}`")))?;
            if !v.is_finite() {
                return Err(Error::format(Some(row), format!("non-finite value `{raw}`")));
            }
            Ok(v)
        };
        for &(_, col) in &coord_cols {
            points.push(cell(col)?);
        }
        if let Some(col) = weight_col {
            let w = cell(col)?;
            if w < 0.0 {
                return Err(Error::format(Some(row), format!("negative weight {w}")));
            }
            weights.push(w);
        }
        if let Some(col) = logpdf_col {
            logd.push(cell(col)?);
        }
    }
    if points.is_empty() {
        return Err(Error::format(None, "file contains no samples"));
    }

    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut batch = SampleBatch::new(points, dim)?.with_label(label);
    if weight_col.is_some() {
        batch = batch
            .with_weights(weights)
            .map_err(|e| Error::format(None, e.to_string()))?;
    }
    if logpdf_col.is_some() {
        batch = batch.with_logdensities(logd)?;
    }
    Ok(batch)
}

/// Formats a float with 17 significant digits, enough to round-trip any `f64`.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(batch: &SampleBatch, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let mut header: Vec<String> = (1..=batch.dim()).map(|j| format!("x_{j}")).collect();
    if batch.is_weighted() {
        header.push("weight".into());
    }
    if batch.logdensities().is_some() {
        header.push("logpdf".into());
    }
    writeln!(out, "{}", header.join(","))?;

    let mut line = String::new();
    for (i, row) in batch.rows().enumerate() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&fmt17(*v));
        }
        if let Some(w) = batch.weights() {
            line.push(',');
            line.push_str(&fmt17(w[i]));
        }
        if let Some(l) = batch.logdensities() {
            line.push(',');
            line.push_str(&fmt17(l[i]));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Number of rows per chunk when `n_eff` effective samples are wanted from a
/// batch with global efficiency `ess / n`.
pub fn chunk_length(batch: &SampleBatch, n_eff: usize) -> usize {
    let efficiency = ess(batch) / batch.len() as f64;
    // Guard against ceil() stepping up on rounding noise, e.g. 100/0.5.
    ((n_eff as f64 / efficiency) - 1e-9).ceil().max(1.0) as usize
}

/// Splits a batch into `m` contiguous chunks of equal row count, each carrying
/// about `n_eff` effective samples. Trailing surplus rows are dropped.
pub fn partition(batch: &SampleBatch, m: usize, n_eff: usize) -> Result<Vec<SampleBatch>> {
    if m == 0 || n_eff == 0 {
        return Err(Error::param("partition needs m >= 1 and n_eff >= 1"));
    }
    let available = ess(batch);
    let required = (m * n_eff) as f64;
    let len = chunk_length(batch, n_eff);
    if available < required || m * len > batch.len() {
        return Err(Error::Capacity {
            required,
            available,
        });
    }
    (0..m)
        .map(|k| batch.slice(k * len, (k + 1) * len))
        .collect()
}

/// Draws `n` unweighted rows by systematic resampling proportional to the
/// weights. One uniform offset `u` is drawn from `seed`; the selected rows are
/// those whose cumulative-weight interval contains `(u + k) / n`.
pub fn weighted_resample(batch: &SampleBatch, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::param("resample size must be at least 1"));
    }
    let total = batch.total_weight();
    let step = total / n as f64;
    let u: f64 = seed::rng(seed).random();

    let mut points = Vec::with_capacity(n * batch.dim());
    let mut logd = batch.logdensities().map(|_| Vec::with_capacity(n));
    let mut idx = 0;
    let mut cum = batch.weight(0);
    let last = batch.len() - 1;
    for k in 0..n {
        let pos = (u + k as f64) * step;
        while cum <= pos && idx < last {
            idx += 1;
            cum += batch.weight(idx);
        }
        points.extend_from_slice(batch.row(idx));
        if let (Some(out), Some(src)) = (logd.as_mut(), batch.logdensities()) {
            out.push(src[idx]);
        }
    }
    let mut out = SampleBatch::new(points, batch.dim())?.with_label(batch.label().to_owned());
    if let Some(l) = logd {
        out = out.with_logdensities(l)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch_1d(xs: &[f64]) -> SampleBatch {
        SampleBatch::new(xs.to_vec(), 1).unwrap()
    }

    #[test]
    fn ess_examples() {
        assert_eq!(ess_of_weights(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 4.0);
        assert!((ess_of_weights(&[1.0, 1.0, 2.0]).unwrap() - 16.0 / 6.0).abs() < 1e-15);
        assert_eq!(ess_of_weights(&[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!(ess_of_weights(&[0.0, 0.0]).is_err());
        assert_eq!(ess(&batch_1d(&[1.0, 2.0, 3.0])), 3.0);
    }

    #[test]
    fn batch_rejects_bad_weights() {
        assert!(batch_1d(&[1.0, 2.0]).with_weights(vec![0.0, 0.0]).is_err());
        assert!(batch_1d(&[1.0, 2.0]).with_weights(vec![1.0, -1.0]).is_err());
        assert!(batch_1d(&[1.0, 2.0]).with_weights(vec![1.0]).is_err());
        assert!(SampleBatch::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(SampleBatch::new(vec![], 2).is_err());
    }

    #[test]
    fn partition_iid_exact_chunks() {
        let b = batch_1d(&(0..100_000).map(f64::from).collect::<Vec<_>>());
        let chunks = partition(&b, 10, 10_000).unwrap();
        assert_eq!(chunks.len(), 10);
        for (k, c) in chunks.iter().enumerate() {
            assert_eq!(c.len(), 10_000);
            assert_eq!(c.row(0)[0], (k * 10_000) as f64);
        }
    }

    #[test]
    fn partition_half_efficiency_doubles_chunk() {
        let xs: Vec<f64> = (0..400).map(f64::from).collect();
        let w: Vec<f64> = (0..400).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let b = batch_1d(&xs).with_weights(w).unwrap();
        assert_eq!(ess(&b), 200.0);
        let chunks = partition(&b, 2, 100).unwrap();
        assert!(chunks.iter().all(|c| c.len() == 200));
    }

    #[test]
    fn partition_capacity_error() {
        let b = batch_1d(&[0.0; 50]);
        match partition(&b, 2, 30) {
            Err(Error::Capacity {
                required,
                available,
            }) => {
                assert_eq!(required, 60.0);
                assert_eq!(available, 50.0);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn partition_drops_tail_and_preserves_order() {
        let b = batch_1d(&(0..105).map(f64::from).collect::<Vec<_>>());
        let chunks = partition(&b, 4, 25).unwrap();
        let flat: Vec<f64> = chunks.iter().flat_map(|c| c.points().to_vec()).collect();
        assert_eq!(flat, (0..100).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn resample_equal_weights_is_identity() {
        let b = batch_1d(&[3.0, 1.0, 4.0, 1.5, 9.0, 2.6]);
        for seed in 0..20 {
            let r = weighted_resample(&b, b.len(), seed).unwrap();
            assert_eq!(r.points(), b.points());
            assert!(!r.is_weighted());
        }
    }

    #[test]
    fn resample_degenerate_and_skewed_weights() {
        let b = batch_1d(&[-1.0, 1.0]).with_weights(vec![0.0, 1.0]).unwrap();
        let r = weighted_resample(&b, 4, 3).unwrap();
        assert_eq!(r.points(), &[1.0; 4]);

        let b = batch_1d(&[-1.0, 1.0]).with_weights(vec![1.0, 3.0]).unwrap();
        for seed in 0..20 {
            let r = weighted_resample(&b, 4, seed).unwrap();
            let mut pts = r.points().to_vec();
            pts.sort_by(f64::total_cmp);
            assert_eq!(pts, vec![-1.0, 1.0, 1.0, 1.0]);
        }
    }

    #[test]
    fn collapse_repeats_builds_multiplicities() {
        let b = batch_1d(&[0.5, 0.5, 0.5, 1.0, 0.5, 0.5]);
        let c = b.collapse_repeats();
        assert_eq!(c.points(), &[0.5, 1.0, 0.5]);
        assert_eq!(c.weights().unwrap(), &[3.0, 1.0, 2.0]);
        assert!((ess(&c) - 36.0 / 14.0).abs() < 1e-15);
    }
}
