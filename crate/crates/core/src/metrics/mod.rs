//! Metric catalogue: one-sample marginal statistics and two-sample distances.

pub mod basic;
pub mod mmd;
pub mod swd;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::SampleBatch;
use crate::targets::TargetSpec;

pub use basic::{chi_square_marginal, marginal_mean, marginal_variance, quantile_edges, MetricValue};
pub use mmd::{gaussian_kernel, median_heuristic, mmd_exact, mmd_rff, Bandwidth, MmdConfig, MmdMode, RffMap};
pub use swd::{sample_unit_sphere, sliced_wasserstein, unit_directions, wasserstein_1d, SwdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arity {
    OneSample,
    TwoSample,
}

/// A metric together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    MarginalMean,
    MarginalVariance,
    ChiSquare { bins: usize },
    Swd(SwdConfig),
    Mmd(MmdConfig),
}

/// Serialized name of one metric output plus its arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetricDescriptor {
    pub name: String,
    pub arity: Arity,
}

impl MetricDescriptor {
    /// Recovers the arity from a serialized name.
    pub fn from_name(name: &str) -> Self {
        let arity = if name.starts_with("swd(") || name.starts_with("mmd") {
            Arity::TwoSample
        } else {
            Arity::OneSample
        };
        Self {
            name: name.to_owned(),
            arity,
        }
    }
}

/// Value of a two-sample metric and, for MMD, the bandwidth it used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSampleValue {
    pub value: f64,
    pub bandwidth: Option<f64>,
}

fn bandwidth_label(b: Bandwidth) -> String {
    match b {
        Bandwidth::Median => "median".into(),
        Bandwidth::Fixed(s) => format!("{s}"),
    }
}

impl Metric {
    pub fn arity(&self) -> Arity {
        match self {
            Metric::MarginalMean | Metric::MarginalVariance | Metric::ChiSquare { .. } => Arity::OneSample,
            Metric::Swd(_) | Metric::Mmd(_) => Arity::TwoSample,
        }
    }

    /// Output names for a target of dimension `dim`; one-sample metrics
    /// emit one value per dimension.
    pub fn names(&self, dim: usize) -> Vec<String> {
        let per_dim = |base: &str| (0..dim).map(|j| format!("{base}[{j}]")).collect();
        match self {
            Metric::MarginalMean => per_dim("marginal_mean"),
            Metric::MarginalVariance => per_dim("marginal_variance"),
            Metric::ChiSquare { .. } => per_dim("chi_square"),
            Metric::Swd(c) => vec![format!("swd(p={},L={})", c.p, c.projections)],
            Metric::Mmd(c) => vec![match c.mode {
                MmdMode::Exact => format!("mmd(σ={})", bandwidth_label(c.bandwidth)),
                MmdMode::Rff { features } => {
                    format!("mmd_rff(σ={},D={features})", bandwidth_label(c.bandwidth))
                }
            }],
        }
    }

    pub fn descriptors(&self, dim: usize) -> Vec<MetricDescriptor> {
        self.names(dim)
            .into_iter()
            .map(|name| MetricDescriptor {
                name,
                arity: self.arity(),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Metric::ChiSquare { bins } if *bins == 0 => Err(Error::param("chi-square needs at least one bin")),
            Metric::Swd(c) => c.validate(),
            Metric::Mmd(c) => c.validate(),
            _ => Ok(()),
        }
    }

    pub fn check_supported(&self, target: &TargetSpec) -> Result<()> {
        if matches!(self, Metric::ChiSquare { .. }) && !target.has_analytic_marginals() {
            return Err(Error::UnsupportedMetric {
                metric: self.to_string(),
                target: target.name().to_owned(),
            });
        }
        Ok(())
    }

    /// Evaluates a one-sample metric; one value per dimension.
    pub fn evaluate_one(&self, batch: &SampleBatch, target: &TargetSpec) -> Result<Vec<f64>> {
        let values = match self {
            Metric::MarginalMean => marginal_mean(batch),
            Metric::MarginalVariance => marginal_variance(batch)?,
            Metric::ChiSquare { bins } => chi_square_marginal(batch, target, *bins)?,
            _ => return Err(Error::param(format!("`{self}` is a two-sample metric"))),
        };
        Ok(values.into_iter().map(|v| v.value).collect())
    }

    /// Evaluates a two-sample metric with its random streams reseeded from
    /// `seed`.
    pub fn evaluate_two(&self, x: &SampleBatch, y: &SampleBatch, seed: u64) -> Result<TwoSampleValue> {
        match self {
            Metric::Swd(c) => {
                let cfg = SwdConfig { seed, ..*c };
                Ok(TwoSampleValue {
                    value: sliced_wasserstein(x, y, &cfg)?,
                    bandwidth: None,
                })
            }
            Metric::Mmd(c) => {
                let out = mmd::mmd(x, y, &c.with_seed(seed))?;
                Ok(TwoSampleValue {
                    value: out.value,
                    bandwidth: Some(out.bandwidth),
                })
            }
            _ => Err(Error::param(format!("`{self}` is a one-sample metric"))),
        }
    }
}

/// Parses the command-line form `name[:key=value,...]`, for example
/// `mean`, `chi2:bins=30`, `swd:p=2,L=100`, `mmd:sigma=median`,
/// `mmd_rff:sigma=0.5,D=500`.
impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, params) = match s.split_once(':') {
            Some((h, p)) => (h.trim(), p),
            None => (s.trim(), ""),
        };
        let mut kv = Vec::new();
        for part in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::param(format!("metric parameter `{part}` is not key=value")))?;
            kv.push((k.trim().to_owned(), v.trim().to_owned()));
        }
        let bad = |k: &str, v: &str| Error::param(format!("invalid value `{v}` for `{k}` in metric `{s}`"));
        let num = |k: &str, v: &str| v.parse::<f64>().map_err(|_| bad(k, v));
        let count = |k: &str, v: &str| v.parse::<usize>().map_err(|_| bad(k, v));
        let seed = |k: &str, v: &str| v.parse::<u64>().map_err(|_| bad(k, v));
        let unknown = |k: &str| Error::param(format!("unknown parameter `{k}` for metric `{head}`"));

        let metric = match head {
            "mean" | "marginal_mean" => {
                if let Some((k, _)) = kv.first() {
                    return Err(unknown(k));
                }
                Metric::MarginalMean
            }
            "variance" | "marginal_variance" => {
                if let Some((k, _)) = kv.first() {
                    return Err(unknown(k));
                }
                Metric::MarginalVariance
            }
            "chi2" | "chi_square" => {
                let mut bins = basic::DEFAULT_CHI_SQUARE_BINS;
                for (k, v) in &kv {
                    match k.as_str() {
                        "bins" => bins = count(k, v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                Metric::ChiSquare { bins }
            }
            "swd" => {
                let mut c = SwdConfig::default();
                for (k, v) in &kv {
                    match k.as_str() {
                        "p" => c.p = num(k, v)?,
                        "L" | "projections" => c.projections = count(k, v)?,
                        "seed" => c.seed = seed(k, v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                Metric::Swd(c)
            }
            "mmd" | "mmd_rff" => {
                let mut c = if head == "mmd" {
                    MmdConfig::default()
                } else {
                    MmdConfig::rff(mmd::DEFAULT_FEATURES)
                };
                for (k, v) in &kv {
                    match k.as_str() {
                        "sigma" | "σ" => {
                            c.bandwidth = if v == "median" {
                                Bandwidth::Median
                            } else {
                                Bandwidth::Fixed(num(k, v)?)
                            }
                        }
                        "D" | "features" if head == "mmd_rff" => {
                            c.mode = MmdMode::Rff {
                                features: count(k, v)?,
                            }
                        }
                        "cap" => c.heuristic_cap = count(k, v)?,
                        "seed" => c.seed = seed(k, v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                Metric::Mmd(c)
            }
            other => {
                return Err(Error::param(format!(
                    "unknown metric `{other}`; expected one of mean, variance, chi2, swd, mmd, mmd_rff"
                )))
            }
        };
        metric.validate()?;
        Ok(metric)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::MarginalMean => write!(f, "mean"),
            Metric::MarginalVariance => write!(f, "variance"),
            Metric::ChiSquare { bins } => write!(f, "chi2:bins={bins}"),
            Metric::Swd(c) => write!(f, "swd:p={},L={},seed={}", c.p, c.projections, c.seed),
            Metric::Mmd(c) => {
                let sigma = bandwidth_label(c.bandwidth);
                match c.mode {
                    MmdMode::Exact => write!(f, "mmd:sigma={sigma},cap={},seed={}", c.heuristic_cap, c.seed),
                    MmdMode::Rff { features } => write!(
                        f,
                        "mmd_rff:sigma={sigma},D={features},cap={},seed={}",
                        c.heuristic_cap, c.seed
                    ),
                }
            }
        }
    }
}
