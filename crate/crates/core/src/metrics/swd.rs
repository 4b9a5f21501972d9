//! Exact one-dimensional Wasserstein distance and its Monte Carlo sliced
//! extension over random unit directions.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seed;
use crate::store::SampleBatch;

pub const DEFAULT_PROJECTIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwdConfig {
    pub projections: usize,
    pub p: f64,
    pub seed: u64,
}

impl Default for SwdConfig {
    fn default() -> Self {
        Self {
            projections: DEFAULT_PROJECTIONS,
            p: 1.0,
            seed: 0,
        }
    }
}

impl SwdConfig {
    pub fn new(projections: usize, p: f64, seed: u64) -> Self {
        Self { projections, p, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.projections == 0 {
            return Err(Error::param("SWD needs at least one projection"));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::param(format!("SWD order p must be >= 1, got {}", self.p)));
        }
        Ok(())
    }
}

/// Pairwise sum whose split points mirror around the centre, so that a
/// slice and its reverse sum to the same value bit for bit.
fn mirrored_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let h = n / 2;
            if n % 2 == 0 {
                mirrored_sum(&xs[..h]) + mirrored_sum(&xs[h..])
            } else {
                (mirrored_sum(&xs[..h]) + mirrored_sum(&xs[h + 1..])) + xs[h]
            }
        }
    }
}

/// `(1/N) Σ |α₍ⱼ₎ − β₍ⱼ₎|ᵖ` for two ascending sequences; the p-th power of W_p.
fn sorted_cost(xs: &[f64], ys: &[f64], p: f64, scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    if p == 1.0 {
        scratch.extend(xs.iter().zip(ys).map(|(a, b)| (a - b).abs()));
    } else if p == 2.0 {
        scratch.extend(xs.iter().zip(ys).map(|(a, b)| (a - b) * (a - b)));
    } else {
        scratch.extend(xs.iter().zip(ys).map(|(a, b)| (a - b).abs().powf(p)));
    }
    mirrored_sum(scratch) / xs.len() as f64
}

fn root(cost: f64, p: f64) -> f64 {
    if p == 1.0 {
        cost
    } else if p == 2.0 {
        cost.sqrt()
    } else {
        cost.powf(1.0 / p)
    }
}

fn check_1d(xs: &[f64], ys: &[f64], p: f64) -> Result<()> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::param(format!(
            "1D Wasserstein needs two nonempty samples of equal size, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("Wasserstein order p must be >= 1, got {p}")));
    }
    Ok(())
}

/// Exact `W_p` between two equally sized 1D samples via sorted matching.
pub fn wasserstein_1d(xs: &[f64], ys: &[f64], p: f64) -> Result<f64> {
    check_1d(xs, ys, p)?;
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    radsort::sort(&mut a);
    radsort::sort(&mut b);
    Ok(root(sorted_cost(&a, &b, p, &mut Vec::new()), p))
}

fn draw_direction<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// `count` directions drawn uniformly on the unit sphere by normalising
/// standard Gaussian vectors.
pub fn unit_directions(d: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if d == 0 {
        return Err(Error::param("sphere dimension must be at least 1"));
    }
    let mut rng = seed::rng(seed);
    Ok((0..count).map(|_| draw_direction(&mut rng, d)).collect())
}

pub fn sample_unit_sphere(d: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(unit_directions(d, 1, seed)?.remove(0))
}

fn project_sorted(batch: &SampleBatch, theta: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(
        batch
            .rows()
            .map(|r| r.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>()),
    );
    radsort::sort(out);
}

/// Per-direction costs `W_p(θᵢ)ᵖ`, in direction order.
pub fn projected_costs(x: &SampleBatch, y: &SampleBatch, cfg: &SwdConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if x.is_weighted() || y.is_weighted() {
        return Err(Error::param(
            "sliced Wasserstein expects unweighted samples; resample weighted input first",
        ));
    }
    if x.len() != y.len() {
        return Err(Error::param(format!(
            "sliced Wasserstein needs equal sample sizes, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.dim() != y.dim() {
        return Err(Error::param(format!(
            "dimension mismatch: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    let directions = unit_directions(x.dim(), cfg.projections, cfg.seed)?;
    let mut a = Vec::with_capacity(x.len());
    let mut b = Vec::with_capacity(y.len());
    let mut scratch = Vec::with_capacity(x.len());
    Ok(directions
        .iter()
        .map(|theta| {
            project_sorted(x, theta, &mut a);
            project_sorted(y, theta, &mut b);
            sorted_cost(&a, &b, cfg.p, &mut scratch)
        })
        .collect())
}

/// `( (1/L) Σᵢ W_p(θᵢ)ᵖ )^{1/p}` with directions derived from `cfg.seed`.
pub fn sliced_wasserstein(x: &SampleBatch, y: &SampleBatch, cfg: &SwdConfig) -> Result<f64> {
    let costs = projected_costs(x, y, cfg)?;
    // Running mean: exact when every direction yields the same cost.
    let mean = costs
        .iter()
        .enumerate()
        .fold(0.0, |m, (i, c)| m + (c - m) / (i + 1) as f64);
    Ok(root(mean, cfg.p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_d_examples() {
        assert_eq!(wasserstein_1d(&[0.3, -1.0, 2.0], &[2.0, 0.3, -1.0], 1.0).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&[0.0, 0.0], &[1.0, 1.0], 1.0).unwrap(), 1.0);
        assert_eq!(wasserstein_1d(&[0.0, 1.0], &[1.0, 0.0], 2.0).unwrap(), 0.0);
        assert!(wasserstein_1d(&[0.0], &[1.0, 2.0], 1.0).is_err());
        assert!(wasserstein_1d(&[0.0], &[1.0], 0.5).is_err());
    }

    #[test]
    fn mirrored_sum_is_reversal_invariant() {
        let xs: Vec<f64> = (0..37).map(|i| (i as f64 * 0.731).sin() * 10f64.powi(i % 7)).collect();
        let mut rev = xs.clone();
        rev.reverse();
        assert_eq!(mirrored_sum(&xs).to_bits(), mirrored_sum(&rev).to_bits());
    }

    #[test]
    fn sphere_samples() {
        for seed in 0..20 {
            let v = sample_unit_sphere(1, seed).unwrap();
            assert!(v[0] == 1.0 || v[0] == -1.0);
            let v = sample_unit_sphere(3, seed).unwrap();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        let dirs = unit_directions(2, 10_000, 5).unwrap();
        let mx = dirs.iter().map(|v| v[0]).sum::<f64>() / 1e4;
        let my = dirs.iter().map(|v| v[1]).sum::<f64>() / 1e4;
        assert!((mx * mx + my * my).sqrt() < 0.05);
    }

    #[test]
    fn swd_rejects_invalid_inputs() {
        let x = SampleBatch::new(vec![0.0, 1.0, 2.0, 3.0], 2).unwrap();
        let y = SampleBatch::new(vec![0.0, 1.0], 2).unwrap();
        let cfg = SwdConfig::default();
        assert!(sliced_wasserstein(&x, &y, &cfg).is_err());
        let y = SampleBatch::new(vec![0.0, 1.0], 1).unwrap();
        assert!(sliced_wasserstein(&x, &y, &cfg).is_err());
        let w = x.clone().with_weights(vec![1.0, 2.0]).unwrap();
        assert!(sliced_wasserstein(&w, &x, &cfg).is_err());
        assert!(sliced_wasserstein(&x, &x, &SwdConfig::new(0, 1.0, 0)).is_err());
    }

    #[test]
    fn self_distance_is_zero() {
        let x = SampleBatch::new((0..40).map(|i| (i as f64).cos()).collect(), 4).unwrap();
        for p in [1.0, 2.0, 3.5] {
            assert_eq!(sliced_wasserstein(&x, &x, &SwdConfig::new(17, p, 3)).unwrap(), 0.0);
        }
    }
}
