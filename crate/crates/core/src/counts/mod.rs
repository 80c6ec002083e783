//! Priors `q_M` on the number of mixture components (support `{1, 2, …}`),
//! the series `Ψ(u,k) = Σ_m (m+k)!/m! ψ(u)^m q_{m+k}` and the posterior law of
//! the number of unallocated components.

use crate::jumps::{JumpError, JumpFamily};
use crate::mathkit::{ln_factorial, ln_gamma, log_add_exp};
use crate::random::{ln_gamma_rate, neg_binomial, open01, poisson};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CountError {
    #[error("invalid count prior parameter: {0}")]
    InvalidParameter(String),
    #[error("{k} clusters impossible under at most {m_tilde} components")]
    Impossible { k: usize, m_tilde: usize },
    #[error(transparent)]
    Jump(#[from] JumpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "prior", rename_all = "snake_case")]
pub enum ComponentCountPrior {
    /// `M - 1 ~ Poisson(Λ)`
    ShiftedPoisson { lambda: f64 },
    /// `M - 1 ~ NegBin(r, p)` with pmf `Γ(r+m-1)/((m-1)! Γ(r)) p^{m-1} (1-p)^r`
    NegBin { p: f64, r: f64 },
    /// `M = M̃`
    Dirac { m_tilde: usize },
}

const SERIES_CAP: usize = 100_000;

impl ComponentCountPrior {
    pub fn validate(&self) -> Result<(), CountError> {
        let bad = |m: String| Err(CountError::InvalidParameter(m));
        match *self {
            ComponentCountPrior::ShiftedPoisson { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                bad(format!("Poisson mean must be positive, got {lambda}"))
            }
            ComponentCountPrior::NegBin { p, r } if !(p > 0.0 && p < 1.0 && r > 0.0 && r.is_finite()) => {
                bad(format!("negative binomial needs p in (0,1) and r > 0, got ({p}, {r})"))
            }
            ComponentCountPrior::Dirac { m_tilde } if m_tilde < 1 => bad("Dirac count must be at least 1".into()),
            _ => Ok(()),
        }
    }

    /// `ln q_m`; `m = 0` has probability zero.
    pub fn log_qm(&self, m: usize) -> f64 {
        if m == 0 {
            return f64::NEG_INFINITY;
        }
        let j = (m - 1) as f64;
        match *self {
            ComponentCountPrior::ShiftedPoisson { lambda } => -lambda + j * lambda.ln() - ln_factorial(m - 1),
            ComponentCountPrior::NegBin { p, r } => ln_gamma(r + j) - ln_factorial(m - 1) - ln_gamma(r) + j * p.ln() + r * (-p).ln_1p(),
            ComponentCountPrior::Dirac { m_tilde } => {
                if m == m_tilde {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ComponentCountPrior::ShiftedPoisson { lambda } => 1.0 + lambda,
            ComponentCountPrior::NegBin { p, r } => 1.0 + r * p / (1.0 - p),
            ComponentCountPrior::Dirac { m_tilde } => m_tilde as f64,
        }
    }

    /// The continuous parameter that may carry a hyperprior: `Λ` or `r`.
    pub fn hyper_param(&self) -> Option<f64> {
        match *self {
            ComponentCountPrior::ShiftedPoisson { lambda } => Some(lambda),
            ComponentCountPrior::NegBin { r, .. } => Some(r),
            ComponentCountPrior::Dirac { .. } => None,
        }
    }

    pub fn with_hyper_param(&self, value: f64) -> Self {
        match *self {
            ComponentCountPrior::ShiftedPoisson { .. } => ComponentCountPrior::ShiftedPoisson { lambda: value },
            ComponentCountPrior::NegBin { p, .. } => ComponentCountPrior::NegBin { p, r: value },
            other => other,
        }
    }

    /// Closed form of `ln Ψ(u,k)` given `ln ψ(u)`; `-inf` when `k` components
    /// cannot be allocated.
    pub fn log_big_psi(&self, k: usize, ln_psi: f64) -> f64 {
        assert!(k >= 1, "Psi(u,k) requires k >= 1");
        let kf = k as f64;
        match *self {
            ComponentCountPrior::ShiftedPoisson { lambda } => {
                let lp = lambda * ln_psi.exp();
                (kf - 1.0) * lambda.ln() + (lp + kf).ln() + lambda * ln_psi.exp_m1()
            }
            ComponentCountPrior::NegBin { p, r } => {
                let x = p * ln_psi.exp();
                ln_gamma(r + kf - 1.0) - ln_gamma(r) + (kf - 1.0) * p.ln() + r * (-p).ln_1p() + (kf + (r - 1.0) * x).ln()
                    - (kf + r) * (-x).ln_1p()
            }
            ComponentCountPrior::Dirac { m_tilde } => {
                if k > m_tilde {
                    return f64::NEG_INFINITY;
                }
                let extra = (m_tilde - k) as f64;
                let pow = if extra == 0.0 { 0.0 } else { extra * ln_psi };
                ln_factorial(m_tilde) - ln_factorial(m_tilde - k) + pow
            }
        }
    }

    /// `ln Ψ(u,k)` by summing the defining series; an oracle for [`Self::log_big_psi`].
    pub fn log_big_psi_series(&self, k: usize, ln_psi: f64) -> f64 {
        let mean = self.mean();
        let mut total = f64::NEG_INFINITY;
        for m in 0..SERIES_CAP {
            let t = ln_factorial(m + k) - ln_factorial(m) + m as f64 * ln_psi + self.log_qm(m + k);
            total = log_add_exp(total, t);
            if let ComponentCountPrior::Dirac { m_tilde } = *self {
                if m + k >= m_tilde {
                    break;
                }
                continue;
            }
            if (m as f64) > k as f64 + 10.0 * (1.0 + mean) && t < total + (1e-16f64).ln() {
                break;
            }
        }
        total
    }

    /// Posterior law of the number of unallocated components given `k`
    /// clusters and `ψ(u)`: `q*_m ∝ (m+k)!/m! ψ(u)^m q_{m+k}`.
    pub fn unallocated_law(&self, k: usize, ln_psi: f64) -> Result<UnallocatedLaw, CountError> {
        let kf = k as f64;
        let psi = ln_psi.exp();
        match *self {
            ComponentCountPrior::Dirac { m_tilde } => {
                if k > m_tilde {
                    return Err(CountError::Impossible { k, m_tilde });
                }
                Ok(UnallocatedLaw::PointMass(m_tilde - k))
            }
            ComponentCountPrior::ShiftedPoisson { lambda } => {
                // (m+k) (Λψ)^m / m! = k·Poisson(m) + Λψ·Poisson(m-1), up to e^{Λψ}
                let mean = lambda * psi;
                if mean == 0.0 {
                    return Ok(UnallocatedLaw::PointMass(0));
                }
                Ok(UnallocatedLaw::PoissonMix { w_plain: kf / (kf + mean), mean })
            }
            ComponentCountPrior::NegBin { p, r } => {
                // (m+k) Γ(a+m) x^m / m! with a = r+k-1 splits into
                // k(1-x)·NB(m; a, x) and a x·NB(m-1; a+1, x)
                let x = p * psi;
                if x == 0.0 {
                    return Ok(UnallocatedLaw::PointMass(0));
                }
                let a = r + kf - 1.0;
                let w0 = kf * (1.0 - x);
                let w1 = a * x;
                Ok(UnallocatedLaw::NegBinMix { w_plain: w0 / (w0 + w1), shape: a, x })
            }
        }
    }

    pub fn sample_m<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            ComponentCountPrior::ShiftedPoisson { lambda } => 1 + poisson(lambda, rng),
            ComponentCountPrior::NegBin { p, r } => 1 + neg_binomial(r, p, rng),
            ComponentCountPrior::Dirac { m_tilde } => m_tilde,
        }
    }

    /// Draw of `U_n = Γ_n / T` from the prior, by simulating `M`, the jumps and
    /// their total `T`.
    pub fn sample_prior_u<R: Rng + ?Sized>(&self, family: &JumpFamily, n: usize, rng: &mut R) -> Result<f64, CountError> {
        let m = self.sample_m(rng);
        let mut ln_t = f64::NEG_INFINITY;
        for _ in 0..m {
            ln_t = log_add_exp(ln_t, family.sample_ln_jump(rng)?);
        }
        Ok((ln_gamma_rate(n as f64, 1.0, rng) - ln_t).exp())
    }
}

/// Law of `M^(na)` on `{0, 1, 2, …}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnallocatedLaw {
    PointMass(usize),
    /// `w_plain · Poisson(mean) + (1 - w_plain) · (1 + Poisson(mean))`
    PoissonMix {
        w_plain: f64,
        mean: f64,
    },
    /// `w_plain · NB(shape, x) + (1 - w_plain) · (1 + NB(shape + 1, x))`, with
    /// `NB(a, x)` the pmf `Γ(a+m)/(m! Γ(a)) x^m (1-x)^a`.
    NegBinMix {
        w_plain: f64,
        shape: f64,
        x: f64,
    },
}

fn ln_poisson(m: usize, mean: f64) -> f64 {
    -mean + m as f64 * mean.ln() - ln_factorial(m)
}

fn ln_negbin0(m: usize, a: f64, x: f64) -> f64 {
    ln_gamma(a + m as f64) - ln_factorial(m) - ln_gamma(a) + m as f64 * x.ln() + a * (-x).ln_1p()
}

impl UnallocatedLaw {
    pub fn ln_pmf(&self, m: usize) -> f64 {
        match *self {
            UnallocatedLaw::PointMass(v) => {
                if m == v {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            UnallocatedLaw::PoissonMix { w_plain, mean } => {
                let a = w_plain.ln() + ln_poisson(m, mean);
                let b = if m == 0 { f64::NEG_INFINITY } else { (1.0 - w_plain).ln() + ln_poisson(m - 1, mean) };
                log_add_exp(a, b)
            }
            UnallocatedLaw::NegBinMix { w_plain, shape, x } => {
                let a = w_plain.ln() + ln_negbin0(m, shape, x);
                let b = if m == 0 { f64::NEG_INFINITY } else { (1.0 - w_plain).ln() + ln_negbin0(m - 1, shape + 1.0, x) };
                log_add_exp(a, b)
            }
        }
    }

    pub fn pmf(&self, m: usize) -> f64 {
        self.ln_pmf(m).exp()
    }

    pub fn mean(&self) -> f64 {
        match *self {
            UnallocatedLaw::PointMass(v) => v as f64,
            UnallocatedLaw::PoissonMix { w_plain, mean } => mean + 1.0 - w_plain,
            UnallocatedLaw::NegBinMix { w_plain, shape, x } => {
                let odds = x / (1.0 - x);
                w_plain * shape * odds + (1.0 - w_plain) * (1.0 + (shape + 1.0) * odds)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            UnallocatedLaw::PointMass(v) => v,
            UnallocatedLaw::PoissonMix { w_plain, mean } => {
                let shift = usize::from(open01(rng) >= w_plain);
                shift + poisson(mean, rng)
            }
            UnallocatedLaw::NegBinMix { w_plain, shape, x } => {
                if open01(rng) < w_plain {
                    neg_binomial(shape, x, rng)
                } else {
                    1 + neg_binomial(shape + 1.0, x, rng)
                }
            }
        }
    }
}

/// Draw `M^(na)` from its law.
pub fn sample_unallocated<R: Rng + ?Sized>(law: &UnallocatedLaw, rng: &mut R) -> usize {
    law.sample(rng)
}

impl fmt::Display for ComponentCountPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentCountPrior::ShiftedPoisson { lambda } => write!(f, "poisson:{lambda}"),
            ComponentCountPrior::NegBin { p, r } => write!(f, "negbin:{p},{r}"),
            ComponentCountPrior::Dirac { m_tilde } => write!(f, "dirac:{m_tilde}"),
        }
    }
}

/// Parses `poisson:Λ`, `negbin:p,r` and `dirac:M`.
impl FromStr for ComponentCountPrior {
    type Err = CountError;
    fn from_str(s: &str) -> Result<Self, CountError> {
        let bad = || CountError::InvalidParameter(format!("cannot parse count prior '{s}'"));
        let (name, args) = s.split_once(':').ok_or_else(bad)?;
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        let num = |i: usize| parts.get(i).and_then(|a| a.parse::<f64>().ok()).ok_or_else(bad);
        let prior = match (name.trim().to_ascii_lowercase().as_str(), parts.len()) {
            ("poisson", 1) => ComponentCountPrior::ShiftedPoisson { lambda: num(0)? },
            ("negbin", 2) => ComponentCountPrior::NegBin { p: num(0)?, r: num(1)? },
            ("dirac", 1) => ComponentCountPrior::Dirac { m_tilde: parts[0].parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        };
        prior.validate()?;
        Ok(prior)
    }
}
