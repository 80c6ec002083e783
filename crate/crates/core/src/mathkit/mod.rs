//! Numerical kernel: special functions, combinatorial coefficient tables and
//! half-line quadrature.
//!
//! Everything here is pure. Values that can overflow are offered in log scale
//! (`ln_*`), with linear-scale wrappers where the spec of the caller needs them.

mod coeff;
mod quad;

pub use coeff::{
    bell_partial, gen_factorial_coeff, gen_stirling, ln_bell_partial_table, stirling1_unsigned, stirling2, CoeffKind, CoeffTable,
};
pub use quad::{integrate_halfline, QuadratureSpec};

use thiserror::Error;

/// Relative size of a series term below which summation stops.
pub const SERIES_REL_TOL: f64 = 1e-15;
/// Hard cap on the number of terms of any power series.
pub const SERIES_MAX_TERMS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{what}: series did not converge within {terms} terms")]
    SeriesCap { what: &'static str, terms: usize },
    #[error("quadrature did not converge: estimate {estimate:e} (log scale), error bound {error_bound:e} (relative)")]
    Quadrature { estimate: f64, error_bound: f64 },
}

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64, MathError> {
    if x.is_nan() || x <= 0.0 {
        return Err(MathError::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma(x))
}

/// Unchecked `ln Γ(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `ln |Γ(x)|` and the sign of `Γ(x)` for any real `x` that is not a pole.
/// Poles (non-positive integers) return `(+inf, 0)`.
pub fn ln_gamma_signed(x: f64) -> (f64, i8) {
    if x > 0.0 {
        return (ln_gamma(x), 1);
    }
    if x == x.floor() {
        return (f64::INFINITY, 0);
    }
    // reflection: Γ(x)Γ(1-x) = π / sin(πx)
    let s = (std::f64::consts::PI * x).sin();
    let ln = std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - x);
    (ln, if s > 0.0 { 1 } else { -1 })
}

/// `ln n!`
#[inline]
pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `ln C(n, k)`
#[inline]
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Stable `ln(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Stable `ln Σ e^{x_i}`; empty input gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// Lower incomplete gamma `γ(n+1, u) = ∫₀ᵘ zⁿ e^{-z} dz` for integer `n`.
pub fn lower_incomplete_gamma_int(n: usize, u: f64) -> Result<f64, MathError> {
    if u.is_nan() || u < 0.0 {
        return Err(MathError::Domain(format!("incomplete gamma requires u >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    Ok((ln_lower_gamma_scaled(n, u) + (n as f64 + 1.0) * u.ln()).exp())
}

/// `ln(γ(n+1,u) / u^{n+1})`, i.e. `ln ∫₀¹ sⁿ e^{-us} ds`; finite at `u = 0`.
///
/// Two orders of evaluation keep this free of cancellation:
/// for `u` below `n+1` the complement `1 - e^{-u} Σ_{m≤n} u^m/m!` is written as the
/// exponential tail `e^{-u} Σ_{m>n} u^m/m!`; above it the Poisson CDF being
/// subtracted is at most about one half.
pub fn ln_lower_gamma_scaled(n: usize, u: f64) -> f64 {
    let nf = n as f64;
    if u <= nf + 1.0 {
        // n! e^{-u} Σ_{j≥0} u^j / (n+1+j)!
        let mut term = 1.0 / (nf + 1.0);
        let mut sum = term;
        let mut j = 0usize;
        while j < SERIES_MAX_TERMS {
            j += 1;
            term *= u / (nf + 1.0 + j as f64);
            sum += term;
            if term < SERIES_REL_TOL * sum {
                break;
            }
        }
        -u + sum.ln()
    } else {
        // Poisson(u) CDF at n, summed from the top term downward
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in (1..=n).rev() {
            term *= m as f64 / u;
            sum += term;
            if term < SERIES_REL_TOL * sum {
                break;
            }
        }
        // e^{-u} u^n/n! * sum
        let ln_cdf = -u + nf * u.ln() - ln_factorial(n) + sum.ln();
        let complement = -ln_cdf.exp_m1();
        ln_factorial(n) + complement.ln() - (nf + 1.0) * u.ln()
    }
}

/// Gauss hypergeometric function `₂F₁(a, b; c; z)` for `0 ≤ z < 1`.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64, MathError> {
    if !(0.0..1.0).contains(&z) {
        return Err(MathError::Domain(format!("2F1 requires 0 <= z < 1, got {z}")));
    }
    if c <= 0.0 && c == c.floor() {
        return Err(MathError::Domain(format!("2F1 requires c not a non-positive integer, got {c}")));
    }
    let d = c - a - b;
    if z > 0.8 && d != d.round() {
        return hyp2f1_near_one(a, b, c, z);
    }
    hyp2f1_series(a, b, c, z)
}

/// Natural log of `₂F₁` for parameter sets where the value is positive.
pub fn ln_gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64, MathError> {
    let v = gauss_2f1(a, b, c, z)?;
    if v <= 0.0 {
        return Err(MathError::Domain(format!("2F1({a},{b};{c};{z}) = {v} is not positive")));
    }
    Ok(v.ln())
}

fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64, MathError> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for l in 0..SERIES_MAX_TERMS {
        let lf = l as f64;
        term *= (a + lf) * (b + lf) / ((c + lf) * (lf + 1.0)) * z;
        sum += term;
        if term == 0.0 || (term / sum).abs() < SERIES_REL_TOL {
            return Ok(sum);
        }
    }
    Err(MathError::SeriesCap { what: "2F1 series", terms: SERIES_MAX_TERMS })
}

/// Connection formula to `1 - z`, valid when `c - a - b` is not an integer.
fn hyp2f1_near_one(a: f64, b: f64, c: f64, z: f64) -> Result<f64, MathError> {
    let w = 1.0 - z;
    let d = c - a - b;
    let (lg_c, s_c) = ln_gamma_signed(c);
    let coef = |num: f64, den1: f64, den2: f64| -> f64 {
        let (ln_num, s_num) = ln_gamma_signed(num);
        let (ln_d1, s_d1) = ln_gamma_signed(den1);
        let (ln_d2, s_d2) = ln_gamma_signed(den2);
        if s_d1 == 0 || s_d2 == 0 {
            // 1/Γ at a pole
            return 0.0;
        }
        let sign = (s_c * s_num * s_d1 * s_d2) as f64;
        sign * (lg_c + ln_num - ln_d1 - ln_d2).exp()
    };
    let first = coef(d, c - a, c - b);
    let second = coef(-d, a, b);
    let mut total = 0.0;
    if first != 0.0 {
        total += first * hyp2f1_series(a, b, 1.0 - d, w)?;
    }
    if second != 0.0 {
        total += second * w.powf(d) * hyp2f1_series(c - a, c - b, 1.0 + d, w)?;
    }
    Ok(total)
}

/// Modified Bessel function of the first kind `I_α(s)`.
pub fn bessel_i(alpha: f64, s: f64) -> Result<f64, MathError> {
    Ok(ln_bessel_i(alpha, s)?.exp())
}

/// `ln I_α(s)` from the power series, summed in log scale so large `s` does not
/// overflow.
pub fn ln_bessel_i(alpha: f64, s: f64) -> Result<f64, MathError> {
    if alpha.is_nan() || alpha < 0.0 || s.is_nan() || s < 0.0 {
        return Err(MathError::Domain(format!("bessel_i requires alpha, s >= 0, got ({alpha}, {s})")));
    }
    if s == 0.0 {
        return Ok(if alpha == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    let ln_half = (0.5 * s).ln();
    let ln_term = |l: f64| (2.0 * l + alpha) * ln_half - ln_gamma(l + 1.0) - ln_gamma(alpha + l + 1.0);
    // terms peak near l* solving l(l+α) = s²/4
    let peak = (0.5 * (-alpha + (alpha * alpha + s * s).sqrt())).floor().max(0.0);
    let ln_peak = ln_term(peak);
    let mut sum = 1.0;
    let mut l = peak;
    let mut converged = false;
    for _ in 0..SERIES_MAX_TERMS {
        l += 1.0;
        let t = (ln_term(l) - ln_peak).exp();
        sum += t;
        if t < SERIES_REL_TOL * sum {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(MathError::SeriesCap { what: "Bessel I series", terms: SERIES_MAX_TERMS });
    }
    let mut l = peak;
    while l >= 1.0 {
        l -= 1.0;
        let t = (ln_term(l) - ln_peak).exp();
        sum += t;
        if t < SERIES_REL_TOL * sum {
            break;
        }
    }
    Ok(ln_peak + sum.ln())
}
