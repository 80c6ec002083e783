//! Distributions `h` of the unnormalized jumps: Laplace transform `ψ(u)`,
//! tilted moments `κ(n,u) = ∫ sⁿ e^{-us} h(s) ds`, and samplers for the
//! exponentially tilted (`e^{-us}h`) and gamma-tilted (`sⁿe^{-us}h`) laws.
//!
//! Samplers come in two flavours: `sample_ln_*` returns the logarithm of the
//! draw (used by the MCMC, where jumps of small-shape families underflow), and
//! `sample_*` returns the draw itself.

mod mixture;
mod stable;

pub use mixture::{BaseDensity, GammaMixParams, GammaMixture};

use crate::mathkit::{ln_gamma, ln_gauss_2f1, ln_lower_gamma_scaled, MathError};
use crate::random::{ln_gamma_rate, ln_std_gamma, open01};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JumpError {
    #[error("invalid jump family parameter: {0}")]
    InvalidParameter(String),
    #[error("{what}: gave up after {attempts} attempts")]
    SamplerCap { what: &'static str, attempts: usize },
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Hard cap on the number of Bessel mixture terms walked by the index sampler.
pub const BESSEL_MAX_TERMS: usize = 10_000;
/// Cumulative mass at which the Bessel index walk stops.
const BESSEL_MASS: f64 = 1.0 - 1e-12;
const BISECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum JumpFamily {
    /// `h = Gamma(γ, 1)`
    Gamma {
        gamma: f64,
    },
    /// `h = U(0, 1)`
    Uniform,
    #[serde(rename = "gamma_mix")]
    GammaMixApprox(GammaMixture),
    #[serde(rename = "stable")]
    SigmaStable {
        sigma: f64,
    },
    Bessel {
        alpha: f64,
        beta: f64,
    },
}

impl JumpFamily {
    pub fn validate(&self) -> Result<(), JumpError> {
        let bad = |msg: String| Err(JumpError::InvalidParameter(msg));
        match *self {
            JumpFamily::Gamma { gamma } if !(gamma > 0.0 && gamma.is_finite()) => bad(format!("gamma shape must be positive, got {gamma}")),
            JumpFamily::SigmaStable { sigma } if !(sigma > 0.0 && sigma < 1.0) => {
                bad(format!("stable index must lie in (0,1), got {sigma}"))
            }
            JumpFamily::Bessel { alpha, beta } if !(alpha > 0.0 && alpha.is_finite() && beta >= 1.0 && beta.is_finite()) => {
                bad(format!("bessel needs alpha > 0 and beta >= 1, got ({alpha}, {beta})"))
            }
            _ => Ok(()),
        }
    }

    /// The family's continuous shape parameter that may carry a hyperprior:
    /// `γ` for Gamma, `α` for Bessel.
    pub fn hyper_param(&self) -> Option<f64> {
        match *self {
            JumpFamily::Gamma { gamma } => Some(gamma),
            JumpFamily::Bessel { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    pub fn with_hyper_param(&self, value: f64) -> JumpFamily {
        match *self {
            JumpFamily::Gamma { .. } => JumpFamily::Gamma { gamma: value },
            JumpFamily::Bessel { beta, .. } => JumpFamily::Bessel { alpha: value, beta },
            ref other => other.clone(),
        }
    }

    pub fn ln_psi(&self, u: f64) -> f64 {
        match self {
            JumpFamily::Gamma { gamma } => -gamma * u.ln_1p(),
            JumpFamily::Uniform => uniform_ln_psi(u),
            JumpFamily::GammaMixApprox(m) => m.ln_kappa(0, u),
            JumpFamily::SigmaStable { sigma } => -u.powf(*sigma),
            JumpFamily::Bessel { alpha, beta } => {
                let v = beta + u;
                alpha * (bessel_c(*beta).ln() - (v + (v * v - 1.0).sqrt()).ln())
            }
        }
    }

    pub fn psi(&self, u: f64) -> f64 {
        self.ln_psi(u).exp()
    }

    /// `ln κ(n,u)`; `n = 0` gives `ln ψ(u)`. Infinite moments return `+inf`.
    pub fn ln_kappa(&self, n: usize, u: f64) -> f64 {
        if n == 0 {
            return self.ln_psi(u);
        }
        let nf = n as f64;
        match self {
            JumpFamily::Gamma { gamma } => ln_gamma(gamma + nf) - ln_gamma(*gamma) - (nf + gamma) * u.ln_1p(),
            JumpFamily::Uniform => ln_lower_gamma_scaled(n, u),
            JumpFamily::GammaMixApprox(m) => m.ln_kappa(n, u),
            JumpFamily::SigmaStable { sigma } => stable::ln_kappa(*sigma, n, u),
            JumpFamily::Bessel { alpha, beta } => bessel_ln_kappa(*alpha, *beta, n, u),
        }
    }

    pub fn kappa(&self, n: usize, u: f64) -> f64 {
        self.ln_kappa(n, u).exp()
    }

    /// Log of one draw from `e^{-us} h(s) / ψ(u)`.
    pub fn sample_ln_exp_tilted<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> Result<f64, JumpError> {
        match self {
            JumpFamily::Gamma { gamma } => Ok(ln_gamma_rate(*gamma, 1.0 + u, rng)),
            JumpFamily::Uniform => {
                let p = open01(rng);
                if u < 1e-300 {
                    return Ok(p.ln());
                }
                // inverse CDF of the Exp(u) law truncated to (0,1)
                Ok((-(p * (-u).exp_m1()).ln_1p() / u).ln())
            }
            JumpFamily::GammaMixApprox(m) => {
                let lw = m.tilted_ln_weights(0, u);
                let l = crate::random::categorical_ln(&lw, rng);
                Ok(ln_gamma_rate(l as f64 + 1.0, u + 1.0 / m.epsilon(), rng))
            }
            JumpFamily::SigmaStable { sigma } => stable::ln_exp_tilted(*sigma, u, rng),
            JumpFamily::Bessel { alpha, beta } => {
                let ln_norm = self.ln_psi(u) + bessel_ln_norm_offset(*alpha, *beta, u, 0);
                let l = bessel_index(*alpha, beta + u, 0, ln_norm, rng)?;
                Ok(ln_gamma_rate(2.0 * l as f64 + alpha, beta + u, rng))
            }
        }
    }

    pub fn sample_exp_tilted<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> Result<f64, JumpError> {
        self.sample_ln_exp_tilted(u, rng).map(f64::exp)
    }

    /// Log of one draw from `sⁿ e^{-us} h(s) / κ(n,u)`.
    pub fn sample_ln_gamma_tilted<R: Rng + ?Sized>(&self, n: usize, u: f64, rng: &mut R) -> Result<f64, JumpError> {
        if n == 0 {
            return self.sample_ln_exp_tilted(u, rng);
        }
        let nf = n as f64;
        match self {
            JumpFamily::Gamma { gamma } => Ok(ln_gamma_rate(gamma + nf, 1.0 + u, rng)),
            JumpFamily::Uniform => Ok(uniform_gamma_tilted(n, u, open01(rng)).ln()),
            JumpFamily::GammaMixApprox(m) => {
                let lw = m.tilted_ln_weights(n, u);
                let l = crate::random::categorical_ln(&lw, rng);
                Ok(ln_gamma_rate(nf + l as f64 + 1.0, u + 1.0 / m.epsilon(), rng))
            }
            JumpFamily::SigmaStable { sigma } => stable::ln_gamma_tilted(*sigma, n, u, rng),
            JumpFamily::Bessel { alpha, beta } => {
                let lk = self.ln_kappa(n, u);
                if !lk.is_finite() {
                    return Err(JumpError::InvalidParameter(format!("bessel gamma-tilted law is improper at u = {u}")));
                }
                let ln_norm = lk + bessel_ln_norm_offset(*alpha, *beta, u, n);
                let l = bessel_index(*alpha, beta + u, n, ln_norm, rng)?;
                Ok(ln_gamma_rate(2.0 * l as f64 + alpha + nf, beta + u, rng))
            }
        }
    }

    pub fn sample_gamma_tilted<R: Rng + ?Sized>(&self, n: usize, u: f64, rng: &mut R) -> Result<f64, JumpError> {
        self.sample_ln_gamma_tilted(n, u, rng).map(f64::exp)
    }

    /// Log of one draw from `h` itself.
    pub fn sample_ln_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, JumpError> {
        match self {
            JumpFamily::Gamma { gamma } => Ok(ln_std_gamma(*gamma, rng)),
            JumpFamily::SigmaStable { sigma } => Ok(stable::ln_stable(*sigma, rng)),
            _ => self.sample_ln_exp_tilted(0.0, rng),
        }
    }

    /// `m` independent draws from `h`.
    pub fn simulate_unnormalized<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<Vec<f64>, JumpError> {
        (0..m).map(|_| self.sample_ln_jump(rng).map(f64::exp)).collect()
    }
}

fn uniform_ln_psi(u: f64) -> f64 {
    if u < 1e-4 {
        (1.0 - u / 2.0 + u * u / 6.0 - u * u * u / 24.0).ln()
    } else {
        (-(-u).exp_m1()).ln() - u.ln()
    }
}

/// Inverse CDF of the density `∝ sⁿ e^{-us}` on `(0,1)` at probability `p`.
///
/// The CDF is `F(s) = s^{n+1} κ(n, us) / κ(n, u)`; solved by bisection in log scale.
fn uniform_gamma_tilted(n: usize, u: f64, p: f64) -> f64 {
    let np1 = n as f64 + 1.0;
    if u == 0.0 {
        return p.powf(1.0 / np1);
    }
    let target = p.ln() + ln_lower_gamma_scaled(n, u);
    let ln_cdf = |s: f64| np1 * s.ln() + ln_lower_gamma_scaled(n, u * s);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if ln_cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn bessel_c(beta: f64) -> f64 {
    beta + (beta * beta - 1.0).sqrt()
}

fn bessel_ln_kappa(alpha: f64, beta: f64, n: usize, u: f64) -> f64 {
    let v = beta + u;
    if v <= 1.0 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    let z = 1.0 / (v * v);
    let f = match ln_gauss_2f1((nf + alpha) / 2.0, (nf + alpha + 1.0) / 2.0, alpha + 1.0, z) {
        Ok(f) => f,
        Err(_) => return f64::NAN,
    };
    alpha.ln() + alpha * bessel_c(beta).ln() - alpha * 2f64.ln() - (nf + alpha) * v.ln() + ln_gamma(alpha + nf) - ln_gamma(alpha + 1.0) + f
}

/// `ln Σ_l w_l` for the index weights `w_l = Γ(2l+α+n) / (l! Γ(α+l+1) (2v)^{2l})`
/// equals `ln κ(n,u)` plus this offset.
fn bessel_ln_norm_offset(alpha: f64, beta: f64, u: f64, n: usize) -> f64 {
    let v = beta + u;
    alpha * 2f64.ln() + (alpha + n as f64) * v.ln() - alpha.ln() - alpha * bessel_c(beta).ln()
}

/// Mixture index for the tilted Bessel laws by sequential inversion against the
/// known normalizer.
fn bessel_index<R: Rng + ?Sized>(alpha: f64, v: f64, n: usize, ln_norm: f64, rng: &mut R) -> Result<usize, JumpError> {
    let p: f64 = open01(rng);
    let nf = n as f64;
    let l2v = 2.0 * (2.0 * v).ln();
    let mut acc = 0.0;
    for l in 0..BESSEL_MAX_TERMS {
        let lf = l as f64;
        let lw = ln_gamma(2.0 * lf + alpha + nf) - ln_gamma(lf + 1.0) - ln_gamma(alpha + lf + 1.0) - lf * l2v;
        acc += (lw - ln_norm).exp();
        if acc >= p || acc >= BESSEL_MASS {
            return Ok(l);
        }
    }
    Err(JumpError::SamplerCap { what: "bessel mixture index", attempts: BESSEL_MAX_TERMS })
}

impl fmt::Display for JumpFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpFamily::Gamma { gamma } => write!(f, "gamma:{gamma}"),
            JumpFamily::Uniform => write!(f, "uniform"),
            JumpFamily::GammaMixApprox(m) => match m.params().base {
                BaseDensity::Gamma { shape, rate } => write!(f, "gammamix:{shape},{rate},{}", m.epsilon()),
                BaseDensity::LogNormal { mu, sigma } => write!(f, "gammamix-lognormal:{mu},{sigma},{}", m.epsilon()),
            },
            JumpFamily::SigmaStable { sigma } => write!(f, "stable:{sigma}"),
            JumpFamily::Bessel { alpha, beta } => write!(f, "bessel:{alpha},{beta}"),
        }
    }
}

/// Parses `gamma:0.5`, `uniform`, `stable:0.5`, `bessel:1,1.5`,
/// `gammamix:shape,rate,eps` and `gammamix-lognormal:mu,sigma,eps`.
impl FromStr for JumpFamily {
    type Err = JumpError;
    fn from_str(s: &str) -> Result<Self, JumpError> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| JumpError::InvalidParameter(format!("bad number in '{s}': {e}")))?
        };
        let want = |k: usize| -> Result<(), JumpError> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(JumpError::InvalidParameter(format!("'{name}' takes {k} parameter(s), got '{s}'")))
            }
        };
        let fam = match name.trim().to_ascii_lowercase().as_str() {
            "gamma" => {
                want(1)?;
                JumpFamily::Gamma { gamma: nums[0] }
            }
            "uniform" => {
                want(0)?;
                JumpFamily::Uniform
            }
            "stable" | "sigma_stable" => {
                want(1)?;
                JumpFamily::SigmaStable { sigma: nums[0] }
            }
            "bessel" => {
                want(2)?;
                JumpFamily::Bessel { alpha: nums[0], beta: nums[1] }
            }
            "gammamix" => {
                want(3)?;
                let base = BaseDensity::Gamma { shape: nums[0], rate: nums[1] };
                JumpFamily::GammaMixApprox(GammaMixture::new(base, nums[2], 1e-14)?)
            }
            "gammamix-lognormal" => {
                want(3)?;
                let base = BaseDensity::LogNormal { mu: nums[0], sigma: nums[1] };
                JumpFamily::GammaMixApprox(GammaMixture::new(base, nums[2], 1e-14)?)
            }
            other => return Err(JumpError::InvalidParameter(format!("unknown jump family '{other}'"))),
        };
        fam.validate()?;
        Ok(fam)
    }
}

#[cfg(test)]
mod tests;
