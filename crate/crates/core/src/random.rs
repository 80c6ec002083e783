//! Random-variate helpers shared by the samplers.
//!
//! Gamma variates are produced in log scale so that small shapes (for example
//! unallocated jumps under `Gamma(0.1, 1)`) do not underflow to zero.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};

/// Module identifiers for RNG substreams; combined with a chain id.
pub mod stream {
    pub const SAMPLER: u64 = 1;
    pub const SIMULATE: u64 = 2;
    pub const INIT: u64 = 3;
}

/// ChaCha generator for `(seed, chain, module)`.
pub fn substream(seed: u64, chain: u64, module: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((chain << 16) | module);
    rng
}

/// `ln G` with `G ~ Gamma(shape, 1)`.
pub fn ln_std_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        // G(a) = G(a+1) U^{1/a}
        let g = Gamma::new(shape + 1.0, 1.0).expect("valid gamma shape").sample(rng);
        let u: f64 = open01(rng);
        g.ln() + u.ln() / shape
    } else {
        Gamma::new(shape, 1.0).expect("valid gamma shape").sample(rng).ln()
    }
}

/// `ln G` with `G ~ Gamma(shape, rate)`.
pub fn ln_gamma_rate<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    ln_std_gamma(shape, rng) - rate.ln()
}

/// `Gamma(shape, rate)` draw on the linear scale.
pub fn gamma_rate<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    ln_gamma_rate(shape, rate, rng).exp()
}

/// Uniform on the open interval `(0, 1)`.
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

pub fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("valid Poisson mean").sample(rng) as usize
}

/// Negative binomial count of failures before `r` successes,
/// pmf `Γ(r+m)/(m! Γ(r)) x^m (1-x)^r`, via its Gamma–Poisson mixture.
pub fn neg_binomial<R: Rng + ?Sized>(r: f64, x: f64, rng: &mut R) -> usize {
    if x <= 0.0 {
        return 0;
    }
    let lam = ln_gamma_rate(r, (1.0 - x) / x, rng).exp();
    poisson(lam, rng)
}

/// Index drawn with probability proportional to `exp(ln_w[i])`, by inversion
/// of the normalized cumulative weights with a single uniform.
pub fn categorical_ln<R: Rng + ?Sized>(ln_w: &[f64], rng: &mut R) -> usize {
    let max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(max.is_finite(), "categorical weights must contain a finite maximum");
    let total: f64 = ln_w.iter().map(|&w| (w - max).exp()).sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in ln_w.iter().enumerate() {
        let p = (w - max).exp();
        if p > 0.0 {
            last = i;
        }
        acc += p;
        if target < acc {
            return i;
        }
    }
    last
}

/// Same as [`categorical_ln`] but reuses a scratch buffer for the weights.
pub fn categorical_ln_buf<R: Rng + ?Sized>(ln_w: &[f64], scratch: &mut Vec<f64>, rng: &mut R) -> usize {
    let max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(max.is_finite(), "categorical weights must contain a finite maximum");
    scratch.clear();
    let mut total = 0.0;
    for &w in ln_w {
        total += (w - max).exp();
        scratch.push(total);
    }
    let target = rng.random::<f64>() * total;
    match scratch.iter().position(|&c| target < c) {
        Some(i) => i,
        None => ln_w.iter().rposition(|&w| w > f64::NEG_INFINITY).unwrap_or(0),
    }
}

/// Dirichlet draw returned as log-probabilities.
pub fn ln_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let lg: Vec<f64> = alpha.iter().map(|&a| ln_std_gamma(a, rng)).collect();
    let norm = crate::mathkit::log_sum_exp(&lg);
    lg.into_iter().map(|g| g - norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_shape_gamma_mean() {
        let mut rng = substream(7, 0, 0);
        let n = 200_000;
        let shape = 0.3;
        let mean: f64 = (0..n).map(|_| ln_std_gamma(shape, &mut rng).exp()).sum::<f64>() / n as f64;
        let se = (shape / n as f64).sqrt();
        assert!((mean - shape).abs() < 4.0 * se);
    }

    #[test]
    fn tiny_shape_does_not_underflow_in_log() {
        let mut rng = substream(1, 0, 0);
        for _ in 0..1000 {
            assert!(ln_std_gamma(0.01, &mut rng).is_finite());
        }
    }

    #[test]
    fn categorical_frequencies() {
        let mut rng = substream(3, 0, 0);
        let w = [0.2f64, 0.5, 0.3];
        let lw: Vec<f64> = w.iter().map(|x| x.ln()).collect();
        let n = 100_000;
        let mut counts = [0usize; 3];
        let mut buf = Vec::new();
        for i in 0..n {
            let j = if i % 2 == 0 { categorical_ln(&lw, &mut rng) } else { categorical_ln_buf(&lw, &mut buf, &mut rng) };
            counts[j] += 1;
        }
        for j in 0..3 {
            let p = counts[j] as f64 / n as f64;
            let se = (w[j] * (1.0 - w[j]) / n as f64).sqrt();
            assert!((p - w[j]).abs() < 4.0 * se);
        }
    }

    #[test]
    fn categorical_skips_zero_weights() {
        let mut rng = substream(5, 0, 0);
        let lw = [f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY];
        for _ in 0..100 {
            assert_eq!(categorical_ln(&lw, &mut rng), 1);
        }
    }

    #[test]
    fn neg_binomial_mean() {
        let mut rng = substream(9, 0, 0);
        let (r, x) = (2.5, 0.4);
        let n = 100_000;
        let mean = (0..n).map(|_| neg_binomial(r, x, &mut rng) as f64).sum::<f64>() / n as f64;
        let exact = r * x / (1.0 - x);
        let sd = (r * x).sqrt() / (1.0 - x);
        assert!((mean - exact).abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn substreams_differ_and_repeat() {
        let a: u64 = substream(11, 0, 1).random();
        let b: u64 = substream(11, 1, 1).random();
        let c: u64 = substream(11, 0, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
