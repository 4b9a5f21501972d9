//! Random-walk Metropolis-Hastings with an isotropic Gaussian proposal.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed;
use crate::store::SampleBatch;
use crate::targets::TargetSpec;

const INIT_RETRIES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    pub n_steps: usize,
    pub n_chains: usize,
    pub proposal_std: f64,
    pub burn_in: usize,
    pub seed: u64,
    /// Starting point for every chain; drawn uniformly from the target bounds
    /// when absent.
    pub initial_point: Option<Vec<f64>>,
}

impl MhConfig {
    /// Single-chain configuration with 10% burn-in.
    pub fn new(n_steps: usize, proposal_std: f64, seed: u64) -> Self {
        Self {
            n_steps,
            n_chains: 1,
            proposal_std,
            burn_in: n_steps / 10,
            seed,
            initial_point: None,
        }
    }

    pub fn with_chains(mut self, n_chains: usize) -> Self {
        self.n_chains = n_chains;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_initial_point(mut self, point: Vec<f64>) -> Self {
        self.initial_point = Some(point);
        self
    }

    pub fn kept_per_chain(&self) -> usize {
        self.n_steps - self.burn_in
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || self.n_chains == 0 {
            return Err(Error::param("MH needs n_steps >= 1 and n_chains >= 1"));
        }
        if self.burn_in >= self.n_steps {
            return Err(Error::param(format!(
                "burn-in {} must be smaller than n_steps {}",
                self.burn_in, self.n_steps
            )));
        }
        if !(self.proposal_std > 0.0 && self.proposal_std.is_finite()) {
            return Err(Error::param(format!(
                "proposal std must be positive, got {}",
                self.proposal_std
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MhOutput {
    /// Chain-major concatenation of the post-burn-in states.
    pub batch: SampleBatch,
    /// Fraction of accepted proposals per chain, burn-in included.
    pub acceptance_rates: Vec<f64>,
}

struct Chain {
    points: Vec<f64>,
    logd: Vec<f64>,
    accepted: usize,
}

fn initial_state<R: Rng>(target: &TargetSpec, cfg: &MhConfig, rng: &mut R) -> Result<(Vec<f64>, f64)> {
    if let Some(p) = &cfg.initial_point {
        let logd = target.log_density(p)?;
        if logd == f64::NEG_INFINITY {
            return Err(Error::param("initial point has zero target density"));
        }
        return Ok((p.clone(), logd));
    }
    for _ in 0..INIT_RETRIES {
        let x: Vec<f64> = target
            .bounds()
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..hi))
            .collect();
        let logd = target.log_density_unchecked(&x);
        if logd > f64::NEG_INFINITY {
            return Ok((x, logd));
        }
    }
    Err(Error::Progress(format!(
        "no initial point with nonzero density found in {INIT_RETRIES} draws from the bounds of `{}`",
        target.name()
    )))
}

fn run_chain(target: &TargetSpec, cfg: &MhConfig, chain: usize) -> Result<Chain> {
    let mut rng = seed::rng(seed::child_seed(cfg.seed, chain as u64, "mh-chain"));
    let (mut x, mut logd) = initial_state(target, cfg, &mut rng)?;
    let d = target.dim();
    let keep = cfg.kept_per_chain();
    let mut points = Vec::with_capacity(keep * d);
    let mut logds = Vec::with_capacity(keep);
    let mut proposal = vec![0.0; d];
    let mut accepted = 0;
    for step in 0..cfg.n_steps {
        for (p, xi) in proposal.iter_mut().zip(&x) {
            *p = xi + cfg.proposal_std * rng.sample::<f64, _>(StandardNormal);
        }
        let logd_new = target.log_density_unchecked(&proposal);
        let u: f64 = rng.random();
        if u.ln() < logd_new - logd {
            std::mem::swap(&mut x, &mut proposal);
            logd = logd_new;
            accepted += 1;
        }
        if step >= cfg.burn_in {
            points.extend_from_slice(&x);
            logds.push(logd);
        }
    }
    Ok(Chain {
        points,
        logd: logds,
        accepted,
    })
}

/// Runs `n_chains` independent chains and concatenates their post-burn-in
/// states chain by chain.
pub fn run_metropolis_hastings(target: &TargetSpec, cfg: &MhConfig) -> Result<MhOutput> {
    cfg.validate()?;
    if let Some(p) = &cfg.initial_point {
        if p.len() != target.dim() {
            return Err(Error::param("initial point dimension does not match target"));
        }
    }
    let chains = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| run_chain(target, cfg, c))
        .collect::<Result<Vec<_>>>()?;

    let acceptance_rates = chains
        .iter()
        .map(|c| c.accepted as f64 / cfg.n_steps as f64)
        .collect();
    let mut points = Vec::with_capacity(cfg.n_chains * cfg.kept_per_chain() * target.dim());
    let mut logd = Vec::with_capacity(cfg.n_chains * cfg.kept_per_chain());
    for c in chains {
        points.extend(c.points);
        logd.extend(c.logd);
    }
    let batch = SampleBatch::new(points, target.dim())?
        .with_logdensities(logd)?
        .with_label(format!("mh:{}", target.name()));
    Ok(MhOutput {
        batch,
        acceptance_rates,
    })
}

pub fn metropolis_hastings(target: &TargetSpec, cfg: &MhConfig) -> Result<SampleBatch> {
    run_metropolis_hastings(target, cfg).map(|o| o.batch)
}
