//! Positive σ-stable law with Laplace transform `exp(-u^σ)` and its tilts.

use super::JumpError;
use crate::mathkit::{log_sum_exp, CoeffTable};
use crate::random::{categorical_ln, ln_gamma_rate, open01, std_exp};
use rand::Rng;
use std::cell::RefCell;
use std::f64::consts::PI;

/// Attempts allowed per naive-rejection draw.
pub const REJECTION_CAP: usize = 1_000_000;

thread_local! {
    static FACTORIAL_TABLES: RefCell<Vec<(u64, CoeffTable)>> = const { RefCell::new(Vec::new()) };
}

/// `ln C(n,k;σ,0)` for `k = 0..=n`, served from a per-thread cache.
pub(crate) fn gen_factorial_row(n: usize, sigma: f64) -> Vec<f64> {
    FACTORIAL_TABLES.with(|cell| {
        let mut tables = cell.borrow_mut();
        let key = sigma.to_bits();
        let pos = tables.iter().position(|(k, _)| *k == key);
        let idx = match pos {
            Some(i) if tables[i].1.n_max() >= n => i,
            Some(i) => {
                let size = n.max(2 * tables[i].1.n_max());
                tables[i].1 = CoeffTable::gen_factorial(size, sigma);
                i
            }
            None => {
                if tables.len() >= 8 {
                    tables.remove(0);
                }
                tables.push((key, CoeffTable::gen_factorial(n.max(64), sigma)));
                tables.len() - 1
            }
        };
        let t = &tables[idx].1;
        (0..=n).map(|k| t.ln(n, k)).collect()
    })
}

/// `ln κ(n,u) = -u^σ - n ln u + ln Σ_k C(n,k;σ,0) u^{σk}`.
pub(crate) fn ln_kappa(sigma: f64, n: usize, u: f64) -> f64 {
    if n == 0 {
        return -u.powf(sigma);
    }
    if u == 0.0 {
        return f64::INFINITY;
    }
    let lu = u.ln();
    let row = gen_factorial_row(n, sigma);
    let terms: Vec<f64> = (1..=n).map(|k| row[k] + sigma * k as f64 * lu).collect();
    -u.powf(sigma) - n as f64 * lu + log_sum_exp(&terms)
}

/// Untilted positive stable variate (Kanter's representation), in log scale.
pub(crate) fn ln_stable<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    let v = PI * open01(rng);
    let e = std_exp(rng);
    (sigma * v).sin().ln() - (v.sin().ln()) / sigma + (1.0 - sigma) / sigma * (((1.0 - sigma) * v).sin().ln() - e.ln())
}

/// Exponentially tilted stable with tilt `lambda` by naive rejection:
/// propose from the untilted law and accept with probability `e^{-λS}`.
fn ln_tilted_naive<R: Rng + ?Sized>(sigma: f64, lambda: f64, rng: &mut R) -> Result<f64, JumpError> {
    for _ in 0..REJECTION_CAP {
        let ls = ln_stable(sigma, rng);
        let u = open01(rng);
        if u.ln() <= -lambda * ls.exp() {
            return Ok(ls);
        }
    }
    Err(JumpError::SamplerCap { what: "tilted stable rejection", attempts: REJECTION_CAP })
}

/// Draw from `e^{-us} h(s) / ψ(u)` in log scale.
///
/// The tilted law is infinitely divisible: it equals the sum of `m` independent
/// copies of `m^{-1/σ} Y` with `Y` tilted by `u m^{-1/σ}`. Choosing `m = ⌈u^σ⌉`
/// keeps each rejection acceptance rate above `e^{-1}`.
pub(crate) fn ln_exp_tilted<R: Rng + ?Sized>(sigma: f64, u: f64, rng: &mut R) -> Result<f64, JumpError> {
    if u == 0.0 {
        return Ok(ln_stable(sigma, rng));
    }
    let m = u.powf(sigma).ceil().max(1.0);
    let scale = -m.ln() / sigma;
    let lambda = u * scale.exp();
    let mut parts = Vec::with_capacity(m as usize);
    for _ in 0..(m as usize) {
        parts.push(scale + ln_tilted_naive(sigma, lambda, rng)?);
    }
    Ok(log_sum_exp(&parts))
}

/// Draw from `sⁿ e^{-us} h(s) / κ(n,u)` in log scale.
///
/// Its Laplace transform `κ(n,u+t)/κ(n,u)` factors as a mixture over `k` with
/// weights `∝ C(n,k;σ,0) u^{σk}` of the exponentially tilted law convolved with
/// `Gamma(n - σk, u)`.
pub(crate) fn ln_gamma_tilted<R: Rng + ?Sized>(sigma: f64, n: usize, u: f64, rng: &mut R) -> Result<f64, JumpError> {
    if n == 0 {
        return ln_exp_tilted(sigma, u, rng);
    }
    if !(u > 0.0) {
        return Err(JumpError::InvalidParameter("gamma-tilted stable requires u > 0".into()));
    }
    let row = gen_factorial_row(n, sigma);
    let lu = u.ln();
    let lw: Vec<f64> = (1..=n).map(|k| row[k] + sigma * k as f64 * lu).collect();
    let k = 1 + categorical_ln(&lw, rng);
    let x = ln_exp_tilted(sigma, u, rng)?;
    let g = ln_gamma_rate(n as f64 - sigma * k as f64, u, rng);
    Ok(crate::mathkit::log_add_exp(x, g))
}
