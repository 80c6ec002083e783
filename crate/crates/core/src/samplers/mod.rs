//! Posterior samplers: the conditional blocked Gibbs sweep over all `M`
//! components and the `U`-augmented marginal sweep over partitions.

mod chain;
mod conditional;
mod hyper;
mod marginal;

pub use chain::{draw_prior_state, initial_state, resimulate_data, run_chain, run_chains, validate_inputs, Observer};
pub use conditional::gibbs_step_conditional;
pub use hyper::{lambda_conditional_mixture, log_partition_weight, update_count_hyper, update_family_hyper, update_lambda_conjugate};
pub use marginal::gibbs_step_marginal;

use crate::counts::{ComponentCountPrior, CountError};
use crate::jumps::{JumpError, JumpFamily};
use crate::kernels::{KernelError, ObservationModel};
use crate::partition::Partition;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Jump(#[from] JumpError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("iteration {iteration}: {source}")]
    AtIteration { iteration: usize, source: Box<SamplerError> },
}

/// `Gamma(shape, rate)` hyperprior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaHyper {
    pub shape: f64,
    pub rate: f64,
}

impl GammaHyper {
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    /// Log density up to its normalizing constant.
    pub fn ln_density(&self, x: f64) -> f64 {
        (self.shape - 1.0) * x.ln() - self.rate * x
    }

    fn validate(&self, what: &str) -> Result<(), SamplerError> {
        if self.shape > 0.0 && self.rate > 0.0 && self.shape.is_finite() && self.rate.is_finite() {
            Ok(())
        } else {
            Err(SamplerError::Config(format!("{what} hyperprior needs positive shape and rate")))
        }
    }
}

/// Optional hyperpriors. `gamma_prior` acts on the jump family's shape (`γ`
/// for Gamma jumps, `α` for Bessel); `lambda_prior` on the count prior's
/// parameter (`Λ` for the shifted Poisson, `r` for the negative binomial).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperPriors {
    pub gamma_prior: Option<GammaHyper>,
    pub lambda_prior: Option<GammaHyper>,
}

impl HyperPriors {
    pub fn validate(&self, family: &JumpFamily, prior: &ComponentCountPrior) -> Result<(), SamplerError> {
        if let Some(g) = &self.gamma_prior {
            g.validate("gamma")?;
            if family.hyper_param().is_none() {
                return Err(SamplerError::Config(format!("jump family {family} has no shape parameter to randomize")));
            }
        }
        if let Some(l) = &self.lambda_prior {
            l.validate("lambda")?;
            if prior.hyper_param().is_none() {
                return Err(SamplerError::Config(format!("count prior {prior} has no parameter to randomize")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Conditional,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    /// Total sweeps including burn-in.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Log-scale random-walk SDs.
    pub u_step: f64,
    pub gamma_step: f64,
    pub lambda_step: f64,
    /// Robbins–Monro step adaptation during burn-in.
    pub adapt: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            algorithm: Algorithm::Conditional,
            iterations: 55_000,
            burn_in: 5_000,
            thin: 10,
            seed: 20_200_101,
            u_step: 0.5,
            gamma_step: 0.5,
            lambda_step: 0.5,
            adapt: true,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.iterations < self.burn_in {
            return Err(SamplerError::Config(format!("iterations ({}) must be at least burn_in ({})", self.iterations, self.burn_in)));
        }
        if self.thin < 1 {
            return Err(SamplerError::Config("thin must be at least 1".into()));
        }
        for (name, v) in [("u_step", self.u_step), ("gamma_step", self.gamma_step), ("lambda_step", self.lambda_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SamplerError::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Acceptance target of the step-size adaptation.
pub const TARGET_ACCEPTANCE: f64 = 0.44;

/// Random-walk step size with acceptance bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhTuning {
    pub log_step: f64,
    pub accepted: u64,
    pub proposed: u64,
    adapted: u64,
}

impl MhTuning {
    pub fn new(step: f64) -> Self {
        MhTuning { log_step: step.ln(), accepted: 0, proposed: 0, adapted: 0 }
    }

    pub fn step(&self) -> f64 {
        self.log_step.exp()
    }

    pub fn record(&mut self, accepted: bool, adapt: bool) {
        self.proposed += 1;
        if accepted {
            self.accepted += 1;
        }
        if adapt {
            self.adapted += 1;
            let a = if accepted { 1.0 } else { 0.0 };
            self.log_step += (a - TARGET_ACCEPTANCE) / (self.adapted as f64).powf(0.6);
        }
    }

    pub fn reset_counts(&mut self) {
        self.accepted = 0;
        self.proposed = 0;
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuning {
    pub u: MhTuning,
    pub gamma: MhTuning,
    pub lambda: MhTuning,
    pub adapting: bool,
}

impl Tuning {
    pub fn from_config(c: &SamplerConfig) -> Self {
        Tuning { u: MhTuning::new(c.u_step), gamma: MhTuning::new(c.gamma_step), lambda: MhTuning::new(c.lambda_step), adapting: false }
    }
}

/// One state of the chain. Components `0..k` are allocated, in order of first
/// appearance in the data; `k..M` are unallocated.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState<A> {
    pub u: f64,
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
    pub ln_jumps: Vec<f64>,
    pub atoms: Vec<A>,
    pub family: JumpFamily,
    pub prior: ComponentCountPrior,
}

impl<A> MixtureState<A> {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn m(&self) -> usize {
        self.ln_jumps.len()
    }

    pub fn m_na(&self) -> usize {
        self.m() - self.k()
    }

    pub fn check(&self) -> Result<(), String> {
        let p = Partition::from_labels(&self.labels);
        if p.labels() != self.labels.as_slice() {
            return Err("labels are not in first-appearance order".into());
        }
        if p.sizes() != self.sizes.as_slice() {
            return Err("cluster sizes disagree with labels".into());
        }
        if self.atoms.len() != self.m() || self.m() < self.k() {
            return Err(format!("{} atoms, {} jumps, {} clusters", self.atoms.len(), self.m(), self.k()));
        }
        if !(self.u > 0.0 && self.u.is_finite()) {
            return Err(format!("u = {} is not positive", self.u));
        }
        if self.ln_jumps.iter().any(|j| j.is_nan() || *j == f64::INFINITY) {
            return Err("non-finite jump".into());
        }
        Ok(())
    }
}

/// Per-cluster sufficient statistics for the allocated components.
fn cluster_stats<M: ObservationModel>(model: &M, data: &[M::Obs], labels: &[usize], k: usize) -> Vec<M::Stats> {
    let mut stats = vec![model.empty_stats(); k];
    for (y, &c) in data.iter().zip(labels) {
        model.add_obs(&mut stats[c], y);
    }
    stats
}

#[cfg(test)]
mod tests;
