//! Gaussian-kernel maximum mean discrepancy: the exact V-statistic, a random
//! Fourier feature approximation, and median-heuristic bandwidths.

use std::f64::consts::PI;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use wide::f64x4;

use crate::error::{Error, Result};
use crate::seed;
use crate::store::SampleBatch;

pub const DEFAULT_FEATURES: usize = 1000;
pub const DEFAULT_HEURISTIC_CAP: usize = 1000;

/// Kernel sums are accumulated in fixed point with this many fractional
/// bits, which makes them independent of summation order and thread count.
const FIXED_FRAC_BITS: i32 = 88;
/// Largest number of kernel terms that cannot overflow the i128 accumulator.
const MAX_KERNEL_TERMS: u128 = 1 << 38;
/// Rows per parallel block for feature means.
const BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MmdMode {
    Exact,
    Rff { features: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmdConfig {
    pub bandwidth: Bandwidth,
    pub mode: MmdMode,
    /// Seeds the feature draw and the heuristic subsample.
    pub seed: u64,
    pub heuristic_cap: usize,
}

impl Default for MmdConfig {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::Median,
            mode: MmdMode::Exact,
            seed: 0,
            heuristic_cap: DEFAULT_HEURISTIC_CAP,
        }
    }
}

impl MmdConfig {
    pub fn rff(features: usize) -> Self {
        Self {
            mode: MmdMode::Rff { features },
            ..Self::default()
        }
    }

    pub fn with_bandwidth(mut self, bandwidth: Bandwidth) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Bandwidth::Fixed(s) = self.bandwidth {
            check_sigma(s)?;
        }
        if let MmdMode::Rff { features } = self.mode {
            if features == 0 {
                return Err(Error::param("RFF needs at least one feature"));
            }
        }
        if self.heuristic_cap < 2 {
            return Err(Error::param("median heuristic cap must be at least 2"));
        }
        Ok(())
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("kernel bandwidth must be positive, got {sigma}")))
    }
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `exp(−‖x−y‖² / 2σ²)`.
pub fn gaussian_kernel(x: &[f64], y: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if x.len() != y.len() {
        return Err(Error::param("kernel arguments differ in dimension"));
    }
    Ok((-sq_dist(x, y) / (2.0 * sigma * sigma)).exp())
}

/// Median Euclidean distance over all unordered pairs of the pooled sample,
/// after subsampling it without replacement to at most `cap` points.
pub fn median_heuristic(x: &SampleBatch, y: &SampleBatch, cap: usize, seed: u64) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::param("median heuristic inputs differ in dimension"));
    }
    let pooled: Vec<&[f64]> = x.rows().chain(y.rows()).collect();
    let chosen: Vec<&[f64]> = if pooled.len() > cap {
        let mut rng = seed::rng(seed);
        let mut idx = index::sample(&mut rng, pooled.len(), cap).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pooled[i]).collect()
    } else {
        pooled
    };
    if chosen.len() < 2 {
        return Err(Error::Degenerate("median heuristic needs at least two points".into()));
    }
    let mut d2 = Vec::with_capacity(chosen.len() * (chosen.len() - 1) / 2);
    for (i, a) in chosen.iter().enumerate() {
        d2.extend(chosen[i + 1..].iter().map(|b| sq_dist(a, b)));
    }
    let k = d2.len();
    let upper = {
        let (_, v, _) = d2.select_nth_unstable_by(k / 2, f64::total_cmp);
        v.sqrt()
    };
    let median = if k % 2 == 1 {
        upper
    } else {
        // Largest value below the upper middle sits in the left partition.
        let lower = d2[..k / 2].iter().cloned().fold(f64::NEG_INFINITY, f64::max).sqrt();
        0.5 * (lower + upper)
    };
    if median > 0.0 {
        Ok(median)
    } else {
        Err(Error::Degenerate(
            "median pairwise distance is zero; cannot choose a kernel bandwidth".into(),
        ))
    }
}

fn check_pair(x: &SampleBatch, y: &SampleBatch) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::param(format!(
            "dimension mismatch: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    if x.is_weighted() || y.is_weighted() {
        return Err(Error::param("MMD expects unweighted samples; resample weighted input first"));
    }
    Ok(())
}

fn to_fixed(k: f64) -> i128 {
    (k * 2f64.powi(FIXED_FRAC_BITS)) as i128
}

fn from_fixed(sum: i128, count: f64) -> f64 {
    sum as f64 / 2f64.powi(FIXED_FRAC_BITS) / count
}

/// Mean of `k(aᵢ, bⱼ)` over all pairs, summed in fixed point.
fn cross_mean(a: &SampleBatch, b: &SampleBatch, gamma: f64) -> f64 {
    let sum: i128 = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let ai = a.row(i);
            b.rows()
                .map(|bj| to_fixed((-gamma * sq_dist(ai, bj)).exp()))
                .sum::<i128>()
        })
        .sum();
    from_fixed(sum, a.len() as f64 * b.len() as f64)
}

/// Mean of `k(aᵢ, aⱼ)` over all ordered pairs including the diagonal.
fn self_mean(a: &SampleBatch, gamma: f64) -> f64 {
    let n = a.len();
    let off: i128 = (0..n)
        .into_par_iter()
        .map(|i| {
            let ai = a.row(i);
            (i + 1..n)
                .map(|j| to_fixed((-gamma * sq_dist(ai, a.row(j))).exp()))
                .sum::<i128>()
        })
        .sum();
    let sum = 2 * off + n as i128 * to_fixed(1.0);
    from_fixed(sum, n as f64 * n as f64)
}

/// Biased (V-statistic) MMD with a Gaussian kernel, returned as the square
/// root of the squared discrepancy clamped at zero.
pub fn mmd_exact(x: &SampleBatch, y: &SampleBatch, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_pair(x, y)?;
    let terms = (x.len() as u128 + y.len() as u128).pow(2);
    if terms > MAX_KERNEL_TERMS {
        return Err(Error::param(format!(
            "exact MMD limited to {MAX_KERNEL_TERMS} kernel terms; use the RFF mode for larger samples"
        )));
    }
    let gamma = 1.0 / (2.0 * sigma * sigma);
    let kxx = self_mean(x, gamma);
    let kyy = self_mean(y, gamma);
    let kxy = cross_mean(x, y, gamma);
    Ok((kxx + kyy - 2.0 * kxy).max(0.0).sqrt())
}

/// Random Fourier feature map `z(x) = √(2/D)·cos(Ωx + b)` for the Gaussian
/// kernel of bandwidth σ.
#[derive(Debug, Clone)]
pub struct RffMap {
    dim: usize,
    features: usize,
    /// `D × dim`, row-major; rows drawn from `N(0, σ⁻² I)`.
    frequencies: Vec<f64>,
    offsets: Vec<f64>,
    /// Frequencies regrouped four features at a time: entry `g·dim + j`
    /// holds coordinate `j` of features `4g..4g+4`. Padding lanes are zero.
    packed: Vec<f64x4>,
    packed_offsets: Vec<f64x4>,
    scale: f64,
}

impl RffMap {
    pub fn new(dim: usize, sigma: f64, features: usize, seed: u64) -> Result<Self> {
        check_sigma(sigma)?;
        if features == 0 || dim == 0 {
            return Err(Error::param("RFF needs at least one feature and one input dimension"));
        }
        let mut rng = seed::rng(seed);
        let mut frequencies = Vec::with_capacity(features * dim);
        let mut offsets = Vec::with_capacity(features);
        for _ in 0..features {
            frequencies.extend((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal) / sigma));
            offsets.push(rng.random_range(0.0..2.0 * PI));
        }
        let groups = features.div_ceil(4);
        let lane = |g: usize, l: usize| 4 * g + l;
        let mut packed = Vec::with_capacity(groups * dim);
        let mut packed_offsets = Vec::with_capacity(groups);
        for g in 0..groups {
            for j in 0..dim {
                packed.push(f64x4::from(std::array::from_fn::<f64, 4, _>(|l| {
                    let f = lane(g, l);
                    if f < features { frequencies[f * dim + j] } else { 0.0 }
                })));
            }
            packed_offsets.push(f64x4::from(std::array::from_fn::<f64, 4, _>(|l| {
                offsets.get(lane(g, l)).copied().unwrap_or(0.0)
            })));
        }
        Ok(Self {
            dim,
            features,
            frequencies,
            offsets,
            packed,
            packed_offsets,
            scale: (2.0 / features as f64).sqrt(),
        })
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    fn accumulate(&self, x: &[f64], acc: &mut [f64x4]) {
        for ((a, w), b) in acc
            .iter_mut()
            .zip(self.packed.chunks_exact(self.dim))
            .zip(&self.packed_offsets)
        {
            let mut phase = *b;
            for (wj, xj) in w.iter().zip(x) {
                phase += *wj * f64x4::splat(*xj);
            }
            *a += phase.cos();
        }
    }

    fn unpack(&self, acc: &[f64x4], factor: f64) -> Vec<f64> {
        acc.iter()
            .flat_map(|v| v.to_array())
            .take(self.features)
            .map(|v| v * factor)
            .collect()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        let mut z = vec![f64x4::ZERO; self.packed_offsets.len()];
        self.accumulate(x, &mut z);
        self.unpack(&z, self.scale)
    }

    /// Mean feature vector of a batch, reduced block by block in row order.
    pub fn mean_embedding(&self, batch: &SampleBatch) -> Vec<f64> {
        let groups = self.packed_offsets.len();
        let blocks: Vec<Vec<f64x4>> = batch
            .points()
            .par_chunks(BLOCK * self.dim)
            .map(|block| {
                let mut acc = vec![f64x4::ZERO; groups];
                for x in block.chunks_exact(self.dim) {
                    self.accumulate(x, &mut acc);
                }
                acc
            })
            .collect();
        let mut sum = vec![f64x4::ZERO; groups];
        for b in blocks {
            sum.iter_mut().zip(b).for_each(|(m, v)| *m += v);
        }
        self.unpack(&sum, self.scale / batch.len() as f64)
    }
}

/// `‖μ̂_X − μ̂_Y‖₂` over `features` random Fourier features.
pub fn mmd_rff(x: &SampleBatch, y: &SampleBatch, sigma: f64, features: usize, seed: u64) -> Result<f64> {
    check_pair(x, y)?;
    let map = RffMap::new(x.dim(), sigma, features, seed)?;
    let mx = map.mean_embedding(x);
    let my = map.mean_embedding(y);
    Ok(mx
        .iter()
        .zip(&my)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmdOutcome {
    pub value: f64,
    pub bandwidth: f64,
}

/// Resolves the bandwidth (median heuristic on the pooled pair when
/// requested) and evaluates the configured estimator.
pub fn mmd(x: &SampleBatch, y: &SampleBatch, cfg: &MmdConfig) -> Result<MmdOutcome> {
    cfg.validate()?;
    check_pair(x, y)?;
    let bandwidth = match cfg.bandwidth {
        Bandwidth::Fixed(s) => s,
        Bandwidth::Median => median_heuristic(x, y, cfg.heuristic_cap, seed::child_seed(cfg.seed, 0, "median"))?,
    };
    let value = match cfg.mode {
        MmdMode::Exact => mmd_exact(x, y, bandwidth)?,
        MmdMode::Rff { features } => mmd_rff(x, y, bandwidth, features, cfg.seed)?,
    };
    Ok(MmdOutcome { value, bandwidth })
}
