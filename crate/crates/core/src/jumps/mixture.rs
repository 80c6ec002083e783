use super::JumpError;
use crate::mathkit::{ln_gamma, log_sum_exp};
use serde::{Deserialize, Serialize};

/// Density `h` approximated by a mixture of `Gamma(l+1, 1/ε)` components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseDensity {
    /// Gamma(shape, rate); `shape ≥ 1` keeps `h(0)` finite.
    Gamma {
        shape: f64,
        rate: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
}

impl BaseDensity {
    pub fn ln_density(&self, s: f64) -> f64 {
        match *self {
            BaseDensity::Gamma { shape, rate } => {
                if s == 0.0 {
                    return if shape == 1.0 { rate.ln() } else { f64::NEG_INFINITY };
                }
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * s.ln() - rate * s
            }
            BaseDensity::LogNormal { mu, sigma } => {
                if s == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (s.ln() - mu) / sigma;
                -0.5 * z * z - s.ln() - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
        }
    }

    /// A point beyond which the density is decreasing.
    fn mode_bound(&self) -> f64 {
        match *self {
            BaseDensity::Gamma { shape, rate } => ((shape - 1.0) / rate).max(0.0),
            BaseDensity::LogNormal { mu, sigma } => (mu - sigma * sigma).exp(),
        }
    }

    fn validate(&self) -> Result<(), JumpError> {
        match *self {
            BaseDensity::Gamma { shape, rate } => {
                if !(shape >= 1.0) || !(rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
                    return Err(JumpError::InvalidParameter(format!(
                        "gamma base density needs shape >= 1 and rate > 0, got ({shape}, {rate})"
                    )));
                }
            }
            BaseDensity::LogNormal { mu, sigma } => {
                if !mu.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(JumpError::InvalidParameter(format!(
                        "lognormal base density needs finite mu and sigma > 0, got ({mu}, {sigma})"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaMixParams {
    pub base: BaseDensity,
    pub epsilon: f64,
    #[serde(default = "default_truncation")]
    pub truncation_tol: f64,
}

fn default_truncation() -> f64 {
    1e-14
}

const MAX_COMPONENTS: usize = 1_000_000;

/// Gamma-mixture approximation with normalized log-weights `ln p_l`, `l = 0..L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaMixParams", into = "GammaMixParams")]
pub struct GammaMixture {
    params: GammaMixParams,
    ln_weights: Vec<f64>,
}

impl From<GammaMixture> for GammaMixParams {
    fn from(m: GammaMixture) -> Self {
        m.params
    }
}

impl TryFrom<GammaMixParams> for GammaMixture {
    type Error = JumpError;
    fn try_from(p: GammaMixParams) -> Result<Self, JumpError> {
        GammaMixture::new(p.base, p.epsilon, p.truncation_tol)
    }
}

impl GammaMixture {
    pub fn new(base: BaseDensity, epsilon: f64, truncation_tol: f64) -> Result<Self, JumpError> {
        base.validate()?;
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(JumpError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(truncation_tol > 0.0 && truncation_tol < 1.0) {
            return Err(JumpError::InvalidParameter(format!("truncation tolerance must lie in (0,1), got {truncation_tol}")));
        }
        let mode = base.mode_bound();
        let mut raw = Vec::new();
        let mut running = f64::NEG_INFINITY;
        for l in 0..MAX_COMPONENTS {
            let s = epsilon * l as f64;
            let w = epsilon.ln() + base.ln_density(s);
            raw.push(w);
            running = crate::mathkit::log_add_exp(running, w);
            if s > mode && w < running + truncation_tol.ln() {
                break;
            }
        }
        if running == f64::NEG_INFINITY {
            return Err(JumpError::InvalidParameter("gamma mixture has no positive weight".into()));
        }
        let norm = log_sum_exp(&raw);
        let ln_weights = raw.into_iter().map(|w| w - norm).collect();
        Ok(GammaMixture { params: GammaMixParams { base, epsilon, truncation_tol }, ln_weights })
    }

    pub fn params(&self) -> &GammaMixParams {
        &self.params
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn ln_weights(&self) -> &[f64] {
        &self.ln_weights
    }

    /// Log-weights of the components of `sⁿ e^{-us} h(s)` before normalization;
    /// component `l` is `Gamma(n+l+1, u + 1/ε)`. Their log-sum is `ln κ(n,u)`.
    pub fn tilted_ln_weights(&self, n: usize, u: f64) -> Vec<f64> {
        let eps = self.params.epsilon;
        let nf = n as f64;
        let l1p = (eps * u).ln_1p();
        self.ln_weights
            .iter()
            .enumerate()
            .map(|(l, &w)| {
                let lf = l as f64;
                w + ln_gamma(nf + lf + 1.0) - ln_gamma(lf + 1.0) + nf * eps.ln() - (nf + lf + 1.0) * l1p
            })
            .collect()
    }

    pub fn ln_kappa(&self, n: usize, u: f64) -> f64 {
        log_sum_exp(&self.tilted_ln_weights(n, u))
    }
}
