//! Hierarchical coaching-effect model over `(μ, τ, θ₁..θ₈)`.
//!
//! Prior: `μ ~ N(0, 5)`, `τ ~ Cauchy⁺(0, 5)`, `θᵢ ~ N(μ, τ)`.
//! Likelihood: `Π N(yᵢ | θᵢ, σᵢ)`.
//! IID draws come from accept-reject against the prior, accepting with
//! probability `L / L_max` where `L_max = Π 1/√(2πσᵢ²)`.

use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHOOLS: usize = 8;
/// `μ`, `τ`, then one `θ` per school.
pub const DIM: usize = SCHOOLS + 2;

pub const DEFAULT_MAX_ATTEMPTS: u64 = 100_000_000;

const PRIOR_MU_SCALE: f64 = 5.0;
const PRIOR_TAU_SCALE: f64 = 5.0;

/// Observed effects and standard errors. Defaults are the published values
/// from Rubin (1981), as distributed with posteriordb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchoolsData {
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Default for SchoolsData {
    fn default() -> Self {
        Self {
            y: vec![28.0, 8.0, -3.0, 7.0, -1.0, 1.0, 18.0, 12.0],
            sigma: vec![15.0, 10.0, 16.0, 11.0, 9.0, 11.0, 10.0, 18.0],
        }
    }
}

impl SchoolsData {
    pub fn validate(&self) -> Result<()> {
        if self.y.len() != SCHOOLS || self.sigma.len() != SCHOOLS {
            return Err(Error::param(format!(
                "eight-schools data needs {SCHOOLS} effects and {SCHOOLS} standard errors, got {} and {}",
                self.y.len(),
                self.sigma.len()
            )));
        }
        if self.sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::param("eight-schools standard errors must be positive"));
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("eight-schools effects must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EightSchools {
    data: SchoolsData,
    max_attempts: u64,
    log_max_likelihood: f64,
}

fn log_normal(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

impl EightSchools {
    pub fn new(data: SchoolsData) -> Result<Self> {
        data.validate()?;
        let log_max_likelihood = data
            .sigma
            .iter()
            .map(|s| -0.5 * (2.0 * std::f64::consts::PI * s * s).ln())
            .sum();
        Ok(Self {
            data,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            log_max_likelihood,
        })
    }

    pub fn with_max_attempts(mut self, max_attempts: u64) -> Self {
        self.max_attempts = max_attempts.max(1);
        self
    }

    pub fn data(&self) -> &SchoolsData {
        &self.data
    }

    pub fn max_attempts(&self) -> u64 {
        self.max_attempts
    }

    pub fn log_max_likelihood(&self) -> f64 {
        self.log_max_likelihood
    }

    pub fn log_prior(&self, point: &[f64]) -> f64 {
        let (mu, tau) = (point[0], point[1]);
        if tau <= 0.0 || !tau.is_finite() {
            return f64::NEG_INFINITY;
        }
        let half_cauchy = (2.0 / (std::f64::consts::PI * PRIOR_TAU_SCALE)).ln()
            - (1.0 + (tau / PRIOR_TAU_SCALE).powi(2)).ln();
        let thetas: f64 = point[2..].iter().map(|&t| log_normal(t, mu, tau)).sum();
        log_normal(mu, 0.0, PRIOR_MU_SCALE) + half_cauchy + thetas
    }

    pub fn log_likelihood(&self, point: &[f64]) -> f64 {
        point[2..]
            .iter()
            .zip(self.data.y.iter().zip(&self.data.sigma))
            .map(|(&theta, (&y, &s))| log_normal(y, theta, s))
            .sum()
    }

    /// Unnormalised log posterior (prior × likelihood).
    pub fn log_density(&self, point: &[f64]) -> f64 {
        let prior = self.log_prior(point);
        if prior == f64::NEG_INFINITY {
            return prior;
        }
        prior + self.log_likelihood(point)
    }

    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let mu = PRIOR_MU_SCALE * rng.sample::<f64, _>(StandardNormal);
        let cauchy = Cauchy::new(0.0, PRIOR_TAU_SCALE).expect("valid scale");
        let mut tau: f64 = cauchy.sample(rng).abs();
        while tau == 0.0 {
            tau = cauchy.sample(rng).abs();
        }
        out[0] = mu;
        out[1] = tau;
        for t in &mut out[2..DIM] {
            *t = mu + tau * rng.sample::<f64, _>(StandardNormal);
        }
    }

    /// Accept-reject draws from the posterior; fails after `max_attempts`
    /// prior proposals.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n * DIM);
        let mut proposal = [0.0; DIM];
        let mut attempts: u64 = 0;
        let mut accepted = 0;
        while accepted < n {
            if attempts >= self.max_attempts {
                return Err(Error::Progress(format!(
                    "accept-reject accepted {accepted} of {n} points in {attempts} attempts"
                )));
            }
            attempts += 1;
            self.sample_prior(rng, &mut proposal);
            let log_ratio = self.log_likelihood(&proposal) - self.log_max_likelihood;
            let u: f64 = rng.random();
            if u.ln() < log_ratio {
                out.extend_from_slice(&proposal);
                accepted += 1;
            }
        }
        Ok(out)
    }
}
