//! Partitions, their exchangeable partition probability function, the prior
//! law of the number of clusters, and prior simulation of partitions.

mod enumerate;

pub use enumerate::{integer_partitions, set_partition_multiplicity, set_partitions};

use crate::counts::{ComponentCountPrior, CountError};
use crate::jumps::{JumpError, JumpFamily};
use crate::mathkit::{integrate_halfline, ln_bell_partial_table, ln_gamma, log_sum_exp, CoeffTable, MathError, QuadratureSpec};
use crate::random::categorical_ln_buf;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("invalid partition: {0}")]
    Invalid(String),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Jump(#[from] JumpError),
}

/// A partition of `{0, …, n-1}` with labels `0..k` in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Canonicalizes arbitrary labels to first-appearance order.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        let mut sizes = Vec::new();
        for &r in raw {
            let next = map.len();
            let l = *map.entry(r).or_insert(next);
            if l == sizes.len() {
                sizes.push(0);
            }
            sizes[l] += 1;
            labels.push(l);
        }
        Partition { labels, sizes }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// Block sizes sorted in decreasing order; the eppf depends on nothing else.
    pub fn size_key(&self) -> Vec<usize> {
        let mut s = self.sizes.clone();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }
}

/// Arguments of the eppf.
#[derive(Debug, Clone)]
pub struct EppfQuery<'a> {
    pub sizes: &'a [usize],
    pub family: &'a JumpFamily,
    pub prior: &'a ComponentCountPrior,
    pub quad: &'a QuadratureSpec,
}

fn check_sizes(sizes: &[usize]) -> Result<usize, PartitionError> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(PartitionError::Invalid(format!("block sizes must be positive and non-empty, got {sizes:?}")));
    }
    Ok(sizes.iter().sum())
}

/// `ln[(u^{n-1}/Γ(n)) Ψ(u,k) Π κ(n_j,u)]`, the joint density of the partition and `U_n`.
pub fn log_joint_u(u: f64, sizes: &[usize], family: &JumpFamily, prior: &ComponentCountPrior) -> f64 {
    let n: usize = sizes.iter().sum();
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let lp = family.ln_psi(u);
    let mut total = (n as f64 - 1.0) * u.ln() - ln_gamma(n as f64) + prior.log_big_psi(sizes.len(), lp);
    if total == f64::NEG_INFINITY {
        return total;
    }
    for &s in sizes {
        total += family.ln_kappa(s, u);
    }
    total
}

/// `ln π(n₁, …, n_k)`.
pub fn log_eppf(q: &EppfQuery) -> Result<f64, PartitionError> {
    let n = check_sizes(q.sizes)?;
    if n == 1 {
        return Ok(0.0);
    }
    if let (JumpFamily::Gamma { gamma }, ComponentCountPrior::Dirac { .. }) = (q.family, q.prior) {
        return log_eppf_fdmm(q.sizes, *gamma, q.prior, q.quad);
    }
    if let ComponentCountPrior::Dirac { m_tilde } = *q.prior {
        if q.sizes.len() > m_tilde {
            return Ok(f64::NEG_INFINITY);
        }
    }
    Ok(integrate_halfline(|u| log_joint_u(u, q.sizes, q.family, q.prior), q.quad)?)
}

/// `ln V(n,k)` for Gamma(γ,1) jumps.
pub fn log_v_fdmm(n: usize, k: usize, gamma: f64, prior: &ComponentCountPrior, quad: &QuadratureSpec) -> Result<f64, PartitionError> {
    let nf = n as f64;
    let kf = k as f64;
    let lgn = ln_gamma(nf);
    match *prior {
        ComponentCountPrior::Dirac { m_tilde } => {
            if k > m_tilde {
                return Ok(f64::NEG_INFINITY);
            }
            let gm = gamma * m_tilde as f64;
            Ok(crate::mathkit::ln_factorial(m_tilde) - crate::mathkit::ln_factorial(m_tilde - k) + ln_gamma(gm) - ln_gamma(nf + gm))
        }
        ComponentCountPrior::ShiftedPoisson { lambda } => {
            // Λ^{k-1} ∫ u^{n-1}/Γ(n) (Λ + k y) (u+1)^{-n-γ(k+1)} exp(-Λ (y-1)/y) du, y = (u+1)^γ
            let f = |u: f64| {
                let l1p = u.ln_1p();
                let ln_y = gamma * l1p;
                let frac = -(-ln_y).exp_m1();
                (nf - 1.0) * u.ln() - lgn + ln_y + (kf + lambda * (-ln_y).exp()).ln() - (nf + gamma * (kf + 1.0)) * l1p - lambda * frac
            };
            Ok((kf - 1.0) * lambda.ln() + integrate_halfline(f, quad)?)
        }
        ComponentCountPrior::NegBin { p, r } => {
            // Γ(r+k-1)/Γ(r) p^{k-1}(1-p)^r ∫ u^{n-1}/Γ(n) (p(r-1) + k y) y^{r-1} (u+1)^{-n} (y-p)^{-(r+k)} du
            let f = |u: f64| {
                let l1p = u.ln_1p();
                let ln_y = gamma * l1p;
                let inv_y = (-ln_y).exp();
                (nf - 1.0) * u.ln() - lgn + ln_y + (p * (r - 1.0) * inv_y + kf).ln() + (r - 1.0) * ln_y
                    - nf * l1p
                    - (r + kf) * (ln_y + (-p * inv_y).ln_1p())
            };
            let c = ln_gamma(r + kf - 1.0) - ln_gamma(r) + (kf - 1.0) * p.ln() + r * (-p).ln_1p();
            Ok(c + integrate_halfline(f, quad)?)
        }
    }
}

/// `ln p(n₁, …, n_k) = ln V(n,k) + Σ ln[Γ(γ+n_j)/Γ(γ)]` for Gamma(γ,1) jumps.
pub fn log_eppf_fdmm(sizes: &[usize], gamma: f64, prior: &ComponentCountPrior, quad: &QuadratureSpec) -> Result<f64, PartitionError> {
    let n = check_sizes(sizes)?;
    if n == 1 {
        return Ok(0.0);
    }
    let v = log_v_fdmm(n, sizes.len(), gamma, prior, quad)?;
    if v == f64::NEG_INFINITY {
        return Ok(v);
    }
    Ok(v + sizes.iter().map(|&s| ln_gamma(gamma + s as f64) - ln_gamma(gamma)).sum::<f64>())
}

/// `ln Pr(K_n = k)` by integrating `Ψ(u,k) B_{n,k}(κ(·,u))`.
pub fn log_prior_k(
    n: usize,
    k: usize,
    family: &JumpFamily,
    prior: &ComponentCountPrior,
    quad: &QuadratureSpec,
) -> Result<f64, PartitionError> {
    if n == 0 || k == 0 || k > n {
        return Err(PartitionError::Invalid(format!("need 1 <= k <= n, got n={n}, k={k}")));
    }
    if n == 1 {
        return Ok(0.0);
    }
    if let ComponentCountPrior::Dirac { m_tilde } = *prior {
        if k > m_tilde {
            return Ok(f64::NEG_INFINITY);
        }
    }
    let nf = n as f64;
    let lgn = ln_gamma(nf);
    let width = n - k + 1;
    let f = |u: f64| {
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let mut lk: Vec<f64> = (1..=width).map(|i| family.ln_kappa(i, u)).collect();
        lk.resize(n, f64::NEG_INFINITY);
        let b = ln_bell_partial_table(&lk, n)[n][k];
        (nf - 1.0) * u.ln() - lgn + prior.log_big_psi(k, family.ln_psi(u)) + b
    };
    Ok(integrate_halfline(f, quad)?)
}

/// `ln p*_k = ln V(n,k) + k ln γ + ln S^{-1,γ}_{n,k}` for Gamma(γ,1) jumps.
pub fn log_prior_k_fdmm(n: usize, k: usize, gamma: f64, prior: &ComponentCountPrior, quad: &QuadratureSpec) -> Result<f64, PartitionError> {
    if n == 0 || k == 0 || k > n {
        return Err(PartitionError::Invalid(format!("need 1 <= k <= n, got n={n}, k={k}")));
    }
    let table = CoeffTable::gen_stirling(n, gamma);
    log_prior_k_fdmm_with(n, k, gamma, prior, quad, &table)
}

fn log_prior_k_fdmm_with(
    n: usize,
    k: usize,
    gamma: f64,
    prior: &ComponentCountPrior,
    quad: &QuadratureSpec,
    table: &CoeffTable,
) -> Result<f64, PartitionError> {
    if n == 1 {
        return Ok(0.0);
    }
    let v = log_v_fdmm(n, k, gamma, prior, quad)?;
    if v == f64::NEG_INFINITY {
        return Ok(v);
    }
    Ok(v + k as f64 * gamma.ln() + table.ln(n, k))
}

/// `ln p*_k` for `k = 1..=n`, using the generalized Stirling route for Gamma
/// jumps and the Bell-polynomial quadrature otherwise.
pub fn log_prior_k_table(
    n: usize,
    family: &JumpFamily,
    prior: &ComponentCountPrior,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>, PartitionError> {
    if n == 0 {
        return Err(PartitionError::Invalid("n must be positive".into()));
    }
    match family {
        JumpFamily::Gamma { gamma } => {
            let table = CoeffTable::gen_stirling(n, *gamma);
            (1..=n).map(|k| log_prior_k_fdmm_with(n, k, *gamma, prior, quad, &table)).collect()
        }
        _ => (1..=n).map(|k| log_prior_k(n, k, family, prior, quad)).collect(),
    }
}

/// Draws a partition of `n` items from the prior by simulating `M`, the jumps,
/// and iid allocations with probabilities `S_m / T`.
pub fn simulate_prior_partition<R: Rng + ?Sized>(
    n: usize,
    family: &JumpFamily,
    prior: &ComponentCountPrior,
    rng: &mut R,
) -> Result<Partition, PartitionError> {
    let m = prior.sample_m(rng);
    let lw: Vec<f64> = (0..m).map(|_| family.sample_ln_jump(rng)).collect::<Result<_, _>>()?;
    let mut buf = Vec::with_capacity(m);
    let raw: Vec<usize> = (0..n).map(|_| categorical_ln_buf(&lw, &mut buf, rng)).collect();
    Ok(Partition::from_labels(&raw))
}

/// Largest relative deviation, over all partitions of `n`, between the finite
/// Dirichlet eppf with `γ = α/Λ` under a shifted Poisson(Λ) prior and the
/// Dirichlet-process eppf `Γ(α)/Γ(α+n) Π α Γ(n_j)`.
pub fn dp_limit_check(alpha: f64, lambda: f64, n: usize, quad: &QuadratureSpec) -> Result<f64, PartitionError> {
    let gamma = alpha / lambda;
    let prior = ComponentCountPrior::ShiftedPoisson { lambda };
    let mut worst: f64 = 0.0;
    for sizes in integer_partitions(n) {
        let fd = log_eppf_fdmm(&sizes, gamma, &prior, quad)?;
        let dp = ln_gamma(alpha) - ln_gamma(alpha + n as f64) + sizes.iter().map(|&s| alpha.ln() + ln_gamma(s as f64)).sum::<f64>();
        worst = worst.max((fd - dp).exp_m1().abs());
    }
    Ok(worst)
}

/// `Σ` over all set partitions of `n` of `π`, grouped by integer partition.
pub fn total_eppf_mass(n: usize, family: &JumpFamily, prior: &ComponentCountPrior, quad: &QuadratureSpec) -> Result<f64, PartitionError> {
    let mut terms = Vec::new();
    for sizes in integer_partitions(n) {
        let q = EppfQuery { sizes: &sizes, family, prior, quad };
        terms.push(set_partition_multiplicity(&sizes).ln() + log_eppf(&q)?);
    }
    Ok(log_sum_exp(&terms).exp())
}

#[cfg(test)]
mod tests;
