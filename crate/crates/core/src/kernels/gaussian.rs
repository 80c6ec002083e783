use super::{KernelError, ObservationModel};
use crate::mathkit::ln_gamma;
use crate::random::{gamma_rate, std_normal};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Univariate normal kernel with a Normal–Inverse-Gamma base measure:
/// `σ² ~ Inv-Gamma(ν₀/2, ν₀σ₀²/2)`, `μ | σ² ~ N(m₀, σ²/κ₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianNig {
    pub m0: f64,
    pub kappa0: f64,
    pub nu0: f64,
    pub sigma0_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianAtom {
    pub mu: f64,
    pub sigma_sq: f64,
}

/// Count with first and second moments taken about `m₀`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GaussianStats {
    pub n: usize,
    s1: f64,
    s2: f64,
}

struct Posterior {
    kappa: f64,
    m: f64,
    nu: f64,
    /// `ν_n σ_n²`
    scale: f64,
}

impl GaussianNig {
    pub fn new(m0: f64, kappa0: f64, nu0: f64, sigma0_sq: f64) -> Result<Self, KernelError> {
        let g = GaussianNig { m0, kappa0, nu0, sigma0_sq };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if !self.m0.is_finite() {
            return Err(KernelError::InvalidParameter(format!("m0 must be finite, got {}", self.m0)));
        }
        for (name, v) in [("kappa0", self.kappa0), ("nu0", self.nu0), ("sigma0_sq", self.sigma0_sq)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(KernelError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn posterior(&self, s: &GaussianStats) -> Posterior {
        let nf = s.n as f64;
        let kappa = self.kappa0 + nf;
        let nu = self.nu0 + nf;
        if s.n == 0 {
            return Posterior { kappa, m: self.m0, nu, scale: self.nu0 * self.sigma0_sq };
        }
        let dbar = s.s1 / nf;
        let ss = (s.s2 - s.s1 * dbar).max(0.0);
        Posterior {
            kappa,
            m: self.m0 + nf * dbar / kappa,
            nu,
            scale: self.nu0 * self.sigma0_sq + ss + self.kappa0 * nf * dbar * dbar / kappa,
        }
    }
}

impl ObservationModel for GaussianNig {
    type Obs = f64;
    type Atom = GaussianAtom;
    type Stats = GaussianStats;

    fn validate_obs(&self, y: &f64) -> Result<(), KernelError> {
        if y.is_finite() {
            Ok(())
        } else {
            Err(KernelError::InvalidObservation(format!("non-finite value {y}")))
        }
    }

    fn empty_stats(&self) -> GaussianStats {
        GaussianStats::default()
    }

    fn add_obs(&self, s: &mut GaussianStats, y: &f64) {
        let d = y - self.m0;
        s.n += 1;
        s.s1 += d;
        s.s2 += d * d;
    }

    fn remove_obs(&self, s: &mut GaussianStats, y: &f64) {
        debug_assert!(s.n > 0);
        if s.n <= 1 {
            *s = GaussianStats::default();
            return;
        }
        let d = y - self.m0;
        s.n -= 1;
        s.s1 -= d;
        s.s2 -= d * d;
    }

    fn log_likelihood(&self, y: &f64, atom: &GaussianAtom) -> f64 {
        let z = y - atom.mu;
        -0.5 * ((2.0 * PI * atom.sigma_sq).ln() + z * z / atom.sigma_sq)
    }

    fn sample_prior_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> GaussianAtom {
        self.sample_posterior_atom(&GaussianStats::default(), rng)
    }

    fn sample_posterior_atom<R: Rng + ?Sized>(&self, s: &GaussianStats, rng: &mut R) -> GaussianAtom {
        let p = self.posterior(s);
        let sigma_sq = 1.0 / gamma_rate(0.5 * p.nu, 0.5 * p.scale, rng);
        let mu = p.m + (sigma_sq / p.kappa).sqrt() * std_normal(rng);
        GaussianAtom { mu, sigma_sq }
    }

    /// Student-t with `ν_n` degrees of freedom, location `m_n` and squared
    /// scale `σ_n²(κ_n + 1)/κ_n`.
    fn log_predictive_stats(&self, y: &f64, s: &GaussianStats) -> f64 {
        let p = self.posterior(s);
        let scale_sq = p.scale / p.nu * (p.kappa + 1.0) / p.kappa;
        let z = y - p.m;
        ln_gamma(0.5 * (p.nu + 1.0))
            - ln_gamma(0.5 * p.nu)
            - 0.5 * (p.nu * PI * scale_sq).ln()
            - 0.5 * (p.nu + 1.0) * (z * z / (p.nu * scale_sq)).ln_1p()
    }

    fn sample_obs<R: Rng + ?Sized>(&self, atom: &GaussianAtom, rng: &mut R) -> f64 {
        atom.mu + atom.sigma_sq.sqrt() * std_normal(rng)
    }
}
