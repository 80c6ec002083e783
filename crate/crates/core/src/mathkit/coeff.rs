//! Triangular coefficient tables kept as (sign, log-magnitude) pairs.

use super::{ln_binomial, log_add_exp, log_sum_exp};

#[derive(Debug, Clone, PartialEq)]
pub enum CoeffKind {
    Stirling1Unsigned,
    Stirling2,
    GenStirling { gamma: f64 },
    GenFactorial { sigma: f64 },
    BellPartial { ln_coeffs: Vec<f64> },
}

/// Entries `(n, k)` for `0 ≤ k ≤ n ≤ n_max`. Anything outside `1 ≤ k ≤ n`
/// (other than `(0, 0)`) is zero, stored as sign 0 and magnitude `-inf`.
#[derive(Debug, Clone)]
pub struct CoeffTable {
    kind: CoeffKind,
    n_max: usize,
    ln_mag: Vec<Vec<f64>>,
    sign: Vec<Vec<i8>>,
}

impl CoeffTable {
    fn from_ln(kind: CoeffKind, ln_mag: Vec<Vec<f64>>) -> Self {
        let sign = ln_mag.iter().map(|row| row.iter().map(|&v| if v == f64::NEG_INFINITY { 0 } else { 1 }).collect()).collect();
        let n_max = ln_mag.len() - 1;
        CoeffTable { kind, n_max, ln_mag, sign }
    }

    /// Unsigned Stirling numbers of the first kind, `c(n,j) = c(n-1,j-1) + (n-1) c(n-1,j)`.
    pub fn stirling1_unsigned(n_max: usize) -> Self {
        let mut t = zero_table(n_max);
        t[0][0] = 0.0;
        for n in 1..=n_max {
            for j in 1..=n {
                let a = t[n - 1][j - 1];
                let b = if j < n { ((n - 1) as f64).ln() + t[n - 1][j] } else { f64::NEG_INFINITY };
                t[n][j] = log_add_exp(a, b);
            }
        }
        Self::from_ln(CoeffKind::Stirling1Unsigned, t)
    }

    /// Stirling numbers of the second kind, `S(n,k) = S(n-1,k-1) + k S(n-1,k)`.
    pub fn stirling2(n_max: usize) -> Self {
        let mut t = zero_table(n_max);
        t[0][0] = 0.0;
        for n in 1..=n_max {
            for k in 1..=n {
                let a = t[n - 1][k - 1];
                let b = if k < n { (k as f64).ln() + t[n - 1][k] } else { f64::NEG_INFINITY };
                t[n][k] = log_add_exp(a, b);
            }
        }
        Self::from_ln(CoeffKind::Stirling2, t)
    }

    /// `S^{-1,γ}_{n,k} = Σ_{j=k}^{n} (-1)^{n-j} s_{n,j} S_{j,k} γ^{j-k}`.
    pub fn gen_stirling(n_max: usize, gamma: f64) -> Self {
        assert!(gamma > 0.0, "gen_stirling requires gamma > 0");
        let c = Self::stirling1_unsigned(n_max);
        let s = Self::stirling2(n_max);
        let lg = gamma.ln();
        let mut t = zero_table(n_max);
        t[0][0] = 0.0;
        for n in 1..=n_max {
            for k in 1..=n {
                // (-1)^{n-j} s_{n,j} is the unsigned Stirling number c(n,j) >= 0,
                // so every summand is nonnegative and log-sum-exp is exact.
                let terms: Vec<f64> = (k..=n).map(|j| c.ln(n, j) + s.ln(j, k) + (j - k) as f64 * lg).collect();
                t[n][k] = log_sum_exp(&terms);
            }
        }
        Self::from_ln(CoeffKind::GenStirling { gamma }, t)
    }

    /// Noncentral generalized factorial coefficients `C(n,k;σ,0)`:
    /// `C(n,k) = σ C(n-1,k-1) + (n-1-kσ) C(n-1,k)`, `C(1,1) = σ`.
    pub fn gen_factorial(n_max: usize, sigma: f64) -> Self {
        assert!(sigma > 0.0 && sigma < 1.0, "gen_factorial requires sigma in (0,1)");
        let ls = sigma.ln();
        let mut t = zero_table(n_max);
        t[0][0] = 0.0;
        for n in 1..=n_max {
            for k in 1..=n {
                let a = ls + t[n - 1][k - 1];
                let factor = (n - 1) as f64 - k as f64 * sigma;
                let b = if k < n && factor > 0.0 { factor.ln() + t[n - 1][k] } else { f64::NEG_INFINITY };
                t[n][k] = log_add_exp(a, b);
            }
        }
        Self::from_ln(CoeffKind::GenFactorial { sigma }, t)
    }

    /// Partial Bell polynomials `B_{n,k}(x₁, x₂, …)` with `ln_coeffs[i-1] = ln x_i`.
    pub fn bell_partial(ln_coeffs: &[f64]) -> Self {
        let n_max = ln_coeffs.len();
        let t = ln_bell_partial_table(ln_coeffs, n_max);
        Self::from_ln(CoeffKind::BellPartial { ln_coeffs: ln_coeffs.to_vec() }, t)
    }

    pub fn kind(&self) -> &CoeffKind {
        &self.kind
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Log-magnitude of entry `(n, k)`; `-inf` outside the triangle.
    pub fn ln(&self, n: usize, k: usize) -> f64 {
        if n > self.n_max || k > n {
            return f64::NEG_INFINITY;
        }
        self.ln_mag[n][k]
    }

    pub fn sign(&self, n: usize, k: usize) -> i8 {
        if n > self.n_max || k > n {
            return 0;
        }
        self.sign[n][k]
    }

    pub fn value(&self, n: usize, k: usize) -> f64 {
        self.sign(n, k) as f64 * self.ln(n, k).exp()
    }
}

fn zero_table(n_max: usize) -> Vec<Vec<f64>> {
    (0..=n_max).map(|n| vec![f64::NEG_INFINITY; n + 1]).collect()
}

/// All `ln B_{m,j}` for `0 ≤ j ≤ m ≤ n`, from
/// `B_{m,j} = Σ_{i=1}^{m-j+1} C(m-1,i-1) x_i B_{m-i,j-1}`, `B_{0,0} = 1`.
/// Only `ln_x[0..n]` is read; the coefficients must be positive.
pub fn ln_bell_partial_table(ln_x: &[f64], n: usize) -> Vec<Vec<f64>> {
    assert!(ln_x.len() >= n, "need {n} Bell coefficients, got {}", ln_x.len());
    let mut b = zero_table(n);
    b[0][0] = 0.0;
    let mut terms = Vec::with_capacity(n);
    for m in 1..=n {
        for j in 1..=m {
            terms.clear();
            for i in 1..=(m - j + 1) {
                let prev = b[m - i][j - 1];
                if prev == f64::NEG_INFINITY {
                    continue;
                }
                terms.push(ln_binomial(m - 1, i - 1) + ln_x[i - 1] + prev);
            }
            b[m][j] = log_sum_exp(&terms);
        }
    }
    b
}

/// `ln c(n, j)`.
pub fn stirling1_unsigned(n: usize, j: usize) -> f64 {
    CoeffTable::stirling1_unsigned(n).ln(n, j)
}

/// `ln S(n, k)`.
pub fn stirling2(n: usize, k: usize) -> f64 {
    CoeffTable::stirling2(n).ln(n, k)
}

/// `ln S^{-1,γ}_{n,k}`.
pub fn gen_stirling(n: usize, k: usize, gamma: f64) -> f64 {
    CoeffTable::gen_stirling(n, gamma).ln(n, k)
}

/// `ln C(n,k;σ,0)`.
pub fn gen_factorial_coeff(n: usize, k: usize, sigma: f64) -> f64 {
    CoeffTable::gen_factorial(n, sigma).ln(n, k)
}

/// `ln B_{n,k}(x)` with `ln_coeffs[i-1] = ln x_i`; at least `n - k + 1` coefficients.
pub fn bell_partial(n: usize, k: usize, ln_coeffs: &[f64]) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let mut padded = ln_coeffs.to_vec();
    padded.resize(n.max(ln_coeffs.len()), f64::NEG_INFINITY);
    ln_bell_partial_table(&padded, n)[n][k]
}
