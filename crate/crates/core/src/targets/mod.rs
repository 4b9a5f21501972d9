//! Catalog of IID-sampleable target distributions.

mod covariance;
mod eight_schools;

use std::path::Path;

use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::seed;
use crate::store::SampleBatch;

pub use covariance::{build_covariance, CovarianceSpec, Mvn};
pub use eight_schools::{EightSchools, SchoolsData, DEFAULT_MAX_ATTEMPTS};

/// Absolute tolerance of the bisection used for mixture quantiles.
const QUANTILE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum TargetKind {
    Normal1D {
        mean: f64,
        std: f64,
    },
    NormalKD {
        mvn: Mvn,
    },
    CorrelatedNormalKD {
        cov: CovarianceSpec,
        mvn: Mvn,
    },
    /// Gaussian mixture whose components share one covariance.
    MixtureNormalKD {
        weights: Vec<f64>,
        components: Vec<Mvn>,
        cov: CovarianceSpec,
    },
    Cauchy1D {
        location: f64,
        scale: f64,
    },
    EightSchools(EightSchools),
}

impl TargetKind {
    pub fn label(&self) -> &'static str {
        match self {
            TargetKind::Normal1D { .. } => "normal-1d",
            TargetKind::NormalKD { .. } => "normal-kd",
            TargetKind::CorrelatedNormalKD { .. } => "correlated-normal-kd",
            TargetKind::MixtureNormalKD { .. } => "mixture-normal-kd",
            TargetKind::Cauchy1D { .. } => "cauchy-1d",
            TargetKind::EightSchools(_) => "eight-schools",
        }
    }
}

/// An analytically known test distribution.
#[derive(Debug, Clone)]
pub struct TargetSpec {
    name: String,
    dim: usize,
    kind: TargetKind,
    bounds: Vec<(f64, f64)>,
    properties: String,
}

impl TargetSpec {
    fn build(name: &str, dim: usize, kind: TargetKind, bound: (f64, f64), properties: &str) -> Self {
        Self {
            name: name.to_owned(),
            dim,
            kind,
            bounds: vec![bound; dim],
            properties: properties.to_owned(),
        }
    }

    pub fn normal_1d(name: &str, mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite()) || !mean.is_finite() {
            return Err(Error::param(format!("normal needs finite mean and std > 0, got std {std}")));
        }
        Ok(Self::build(name, 1, TargetKind::Normal1D { mean, std }, (-10.0, 10.0), "unimodal"))
    }

    /// Normal with identity covariance.
    pub fn normal_kd(name: &str, mean: Vec<f64>) -> Result<Self> {
        let k = mean.len();
        let mvn = Mvn::new(mean, &CovarianceSpec::identity(k))?;
        Ok(Self::build(name, k, TargetKind::NormalKD { mvn }, (-10.0, 10.0), "unimodal"))
    }

    pub fn correlated_normal_kd(name: &str, mean: Vec<f64>, correlation: f64) -> Result<Self> {
        let cov = CovarianceSpec::new(mean.len(), correlation)?;
        let mvn = Mvn::new(mean, &cov)?;
        Ok(Self::build(
            name,
            cov.dim(),
            TargetKind::CorrelatedNormalKD { cov, mvn },
            (-10.0, 10.0),
            "unimodal, correlated",
        ))
    }

    /// Mixture `Σ wᵢ N(meansᵢ, Σ)` with `Σ = r·J + (1−r)·I`.
    pub fn mixture_normal_kd(
        name: &str,
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        correlation: f64,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() {
            return Err(Error::param("mixture needs one weight per component"));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::param("mixture weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("mixture weights sum to {total}, not 1")));
        }
        let k = means[0].len();
        let cov = CovarianceSpec::new(k, correlation)?;
        let components = means
            .into_iter()
            .map(|m| Mvn::new(m, &cov))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::build(
            name,
            k,
            TargetKind::MixtureNormalKD {
                weights,
                components,
                cov,
            },
            (-100.0, 100.0),
            "multimodal, correlated",
        ))
    }

    /// Two-component mixture `0.25·N(μ, Σ) + 0.75·N(−μ, Σ)` with `μ = offset·𝟙`.
    pub fn bimodal_mixture(name: &str, dim: usize, offset: f64, correlation: f64) -> Result<Self> {
        Self::mixture_normal_kd(
            name,
            vec![0.25, 0.75],
            vec![vec![offset; dim], vec![-offset; dim]],
            correlation,
        )
    }

    pub fn cauchy_1d(name: &str, location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) || !location.is_finite() {
            return Err(Error::param(format!("Cauchy needs finite location and scale > 0, got {scale}")));
        }
        Ok(Self::build(
            name,
            1,
            TargetKind::Cauchy1D { location, scale },
            (-100.0, 100.0),
            "unimodal, heavy-tailed",
        ))
    }

    pub fn eight_schools(name: &str, model: EightSchools) -> Self {
        let mut spec = Self::build(
            name,
            eight_schools::DIM,
            TargetKind::EightSchools(model),
            (-30.0, 30.0),
            "hierarchical, funnel",
        );
        spec.bounds[0] = (-20.0, 20.0);
        spec.bounds[1] = (0.0, 20.0);
        spec
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() != self.dim || bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::param("bounds need one nonempty interval per dimension"));
        }
        self.bounds = bounds;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &TargetKind {
        &self.kind
    }

    /// Per-dimension plotting range; never used to truncate the density.
    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn properties(&self) -> &str {
        &self.properties
    }

    pub fn log_density(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim {
            return Err(Error::param(format!(
                "point has dimension {}, target `{}` has {}",
                point.len(),
                self.name,
                self.dim
            )));
        }
        Ok(self.log_density_unchecked(point))
    }

    pub(crate) fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            TargetKind::Normal1D { mean, std } => {
                let z = (x[0] - mean) / std;
                -0.5 * z * z - std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            TargetKind::NormalKD { mvn } | TargetKind::CorrelatedNormalKD { mvn, .. } => mvn.log_pdf(x),
            TargetKind::MixtureNormalKD {
                weights,
                components,
                ..
            } => {
                let terms: Vec<f64> = weights
                    .iter()
                    .zip(components)
                    .map(|(w, c)| w.ln() + c.log_pdf(x))
                    .collect();
                log_sum_exp(&terms)
            }
            TargetKind::Cauchy1D { location, scale } => {
                let z = (x[0] - location) / scale;
                -(std::f64::consts::PI * scale).ln() - (1.0 + z * z).ln()
            }
            TargetKind::EightSchools(model) => model.log_density(x),
        }
    }

    /// `n` IID draws, unweighted, reproducible from `seed`.
    pub fn sample_iid(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        if n == 0 {
            return Err(Error::param("sample size must be at least 1"));
        }
        let mut rng = seed::rng(seed);
        let mut points = Vec::with_capacity(n * self.dim);
        match &self.kind {
            TargetKind::Normal1D { mean, std } => {
                points.extend((0..n).map(|_| mean + std * rng.sample::<f64, _>(StandardNormal)));
            }
            TargetKind::NormalKD { mvn } | TargetKind::CorrelatedNormalKD { mvn, .. } => {
                for _ in 0..n {
                    mvn.sample_into(&mut rng, &mut points);
                }
            }
            TargetKind::MixtureNormalKD {
                weights,
                components,
                ..
            } => {
                for _ in 0..n {
                    let c = pick_component(weights, rng.random());
                    components[c].sample_into(&mut rng, &mut points);
                }
            }
            TargetKind::Cauchy1D { location, scale } => {
                let dist = Cauchy::new(*location, *scale).expect("validated scale");
                points.extend((0..n).map(|_| dist.sample(&mut rng)));
            }
            TargetKind::EightSchools(model) => points = model.sample(&mut rng, n)?,
        }
        Ok(SampleBatch::new(points, self.dim)?.with_label(format!("iid:{}", self.name)))
    }

    fn unsupported(&self, metric: &str) -> Error {
        Error::UnsupportedMetric {
            metric: metric.to_owned(),
            target: self.name.clone(),
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim >= self.dim {
            return Err(Error::param(format!(
                "dimension index {dim} out of range for `{}` ({} dims)",
                self.name, self.dim
            )));
        }
        Ok(())
    }

    pub fn has_analytic_marginals(&self) -> bool {
        !matches!(self.kind, TargetKind::EightSchools(_))
    }

    /// CDF of the one-dimensional marginal along `dim`.
    pub fn marginal_cdf(&self, dim: usize, x: f64) -> Result<f64> {
        self.check_dim(dim)?;
        let std_normal = Normal::standard();
        Ok(match &self.kind {
            TargetKind::Normal1D { mean, std } => std_normal.cdf((x - mean) / std),
            // Every catalog covariance has unit diagonal.
            TargetKind::NormalKD { mvn } | TargetKind::CorrelatedNormalKD { mvn, .. } => {
                std_normal.cdf(x - mvn.mean()[dim])
            }
            TargetKind::MixtureNormalKD {
                weights,
                components,
                ..
            } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * std_normal.cdf(x - c.mean()[dim]))
                .sum(),
            TargetKind::Cauchy1D { location, scale } => {
                0.5 + ((x - location) / scale).atan() / std::f64::consts::PI
            }
            TargetKind::EightSchools(_) => return Err(self.unsupported("marginal_cdf")),
        })
    }

    /// Inverse of [`marginal_cdf`](Self::marginal_cdf) for `p` in (0, 1).
    pub fn marginal_quantile(&self, dim: usize, p: f64) -> Result<f64> {
        self.check_dim(dim)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param(format!("quantile level {p} outside (0, 1)")));
        }
        let std_normal = Normal::standard();
        Ok(match &self.kind {
            TargetKind::Normal1D { mean, std } => mean + std * std_normal.inverse_cdf(p),
            TargetKind::NormalKD { mvn } | TargetKind::CorrelatedNormalKD { mvn, .. } => {
                mvn.mean()[dim] + std_normal.inverse_cdf(p)
            }
            TargetKind::MixtureNormalKD { components, .. } => {
                let centers = components.iter().map(|c| c.mean()[dim]);
                let lo = centers.clone().fold(f64::INFINITY, f64::min)
                    + std_normal.inverse_cdf(p.min(0.5));
                let hi = centers.fold(f64::NEG_INFINITY, f64::max)
                    + std_normal.inverse_cdf(p.max(0.5));
                bisect(|x| self.marginal_cdf(dim, x).expect("analytic marginal") - p, lo - 1.0, hi + 1.0)
            }
            TargetKind::Cauchy1D { location, scale } => {
                location + scale * (std::f64::consts::PI * (p - 0.5)).tan()
            }
            TargetKind::EightSchools(_) => return Err(self.unsupported("marginal_quantile")),
        })
    }
}

fn pick_component(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Root of an increasing function bracketed by `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > QUANTILE_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Overrides applied when building the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogConfig {
    pub eight_schools: SchoolsData,
    /// Mixture components sit at `±offset·𝟙`.
    pub mixture_offset: f64,
    pub accept_reject_max_attempts: u64,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        Self {
            eight_schools: SchoolsData::default(),
            mixture_offset: 5.0,
            accept_reject_max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

impl CatalogConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.eight_schools.validate()?;
        if !cfg.mixture_offset.is_finite() {
            return Err(Error::param("mixture offset must be finite"));
        }
        Ok(cfg)
    }
}

/// All built-in test cases, in a fixed order.
pub fn catalog_with(config: &CatalogConfig) -> Result<Vec<TargetSpec>> {
    let mut out = vec![TargetSpec::normal_1d("Normal-1D", 0.0, 1.0)?];
    for k in [2, 3, 10, 100] {
        out.push(TargetSpec::normal_kd(&format!("Normal-{k}D-Uncorrelated"), vec![0.0; k])?);
    }
    for (strength, r) in [("Weakly", 0.2), ("Strongly", 0.9)] {
        for k in [2, 10, 100] {
            out.push(TargetSpec::correlated_normal_kd(
                &format!("Normal-{k}D-{strength}-Correlated"),
                vec![0.0; k],
                r,
            )?);
        }
    }
    for k in [3, 10] {
        out.push(TargetSpec::bimodal_mixture(
            &format!("Mixture-Normal-{k}D-Strongly-Correlated"),
            k,
            config.mixture_offset,
            0.9,
        )?);
    }
    out.push(TargetSpec::cauchy_1d("Cauchy-1D", 0.0, 1.0)?);
    let model = EightSchools::new(config.eight_schools.clone())?
        .with_max_attempts(config.accept_reject_max_attempts);
    out.push(TargetSpec::eight_schools("Eight-Schools", model));
    Ok(out)
}

pub fn catalog() -> Vec<TargetSpec> {
    catalog_with(&CatalogConfig::default()).expect("default catalog is valid")
}

pub fn lookup_with(name: &str, config: &CatalogConfig) -> Result<TargetSpec> {
    catalog_with(config)?
        .into_iter()
        .find(|t| t.name == name)
        .ok_or_else(|| Error::NotFound(format!("no test case named `{name}`")))
}

pub fn lookup(name: &str) -> Result<TargetSpec> {
    lookup_with(name, &CatalogConfig::default())
}
