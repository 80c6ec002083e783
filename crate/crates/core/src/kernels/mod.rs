//! Mixture kernels `f(y | τ)` paired with conjugate base measures `p₀`.

mod gaussian;
mod genotype;

pub use gaussian::{GaussianAtom, GaussianNig, GaussianStats};
pub use genotype::{GenotypeAtom, GenotypeModel, GenotypeStats};

use rand::Rng;
use std::fmt::Debug;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
}

/// An observation model with a conjugate prior, summarised through additive
/// sufficient statistics so that clusters can gain and lose members cheaply.
pub trait ObservationModel: Send + Sync {
    type Obs: Clone + Send + Sync + Debug;
    type Atom: Clone + Send + Sync + Debug;
    type Stats: Clone + Send + Sync + Debug;

    fn validate_obs(&self, y: &Self::Obs) -> Result<(), KernelError>;

    fn empty_stats(&self) -> Self::Stats;
    fn add_obs(&self, stats: &mut Self::Stats, y: &Self::Obs);
    fn remove_obs(&self, stats: &mut Self::Stats, y: &Self::Obs);

    fn log_likelihood(&self, y: &Self::Obs, atom: &Self::Atom) -> f64;
    fn sample_prior_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Atom;
    fn sample_posterior_atom<R: Rng + ?Sized>(&self, stats: &Self::Stats, rng: &mut R) -> Self::Atom;
    /// `ln ∫ f(y|τ) p(τ | stats) dτ`.
    fn log_predictive_stats(&self, y: &Self::Obs, stats: &Self::Stats) -> f64;
    fn sample_obs<R: Rng + ?Sized>(&self, atom: &Self::Atom, rng: &mut R) -> Self::Obs;

    fn stats_of<'a, I>(&self, data: I) -> Self::Stats
    where
        I: IntoIterator<Item = &'a Self::Obs>,
        Self::Obs: 'a,
    {
        let mut s = self.empty_stats();
        for y in data {
            self.add_obs(&mut s, y);
        }
        s
    }

    fn log_predictive(&self, y: &Self::Obs, cluster_data: &[Self::Obs]) -> f64 {
        self.log_predictive_stats(y, &self.stats_of(cluster_data))
    }

    fn sample_posterior_atom_data<R: Rng + ?Sized>(&self, cluster_data: &[Self::Obs], rng: &mut R) -> Self::Atom {
        self.sample_posterior_atom(&self.stats_of(cluster_data), rng)
    }
}
