use super::{GammaHyper, HyperPriors, MhTuning, MixtureState};
use crate::counts::ComponentCountPrior;
use crate::jumps::JumpFamily;
use crate::mathkit::ln_gamma;
use crate::random::{gamma_rate, open01, std_normal};
use rand::Rng;

/// `ln Ψ(u,k) + Σ_j ln κ(n_j, u)`: the factors of the joint law of
/// `(U, ρ)` that depend on the jump family and the count prior.
pub fn log_partition_weight(u: f64, sizes: &[usize], family: &JumpFamily, prior: &ComponentCountPrior) -> f64 {
    let lp = prior.log_big_psi(sizes.len(), family.ln_psi(u));
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    lp + sizes.iter().map(|&n| family.ln_kappa(n, u)).sum::<f64>()
}

/// The full conditional of `Λ` under a shifted Poisson prior and a
/// `Gamma(a₂, b₂)` hyperprior, given `k` clusters and `ψ(u)`:
///
/// `Λ^{k-1}(Λψ + k) e^{-Λ(1-ψ)} · Λ^{a₂-1} e^{-b₂Λ}`
/// `= ψ Λ^{k+a₂-1} e^{-cΛ} + k Λ^{k+a₂-2} e^{-cΛ}`, `c = 1 - ψ + b₂`,
///
/// a two-component Gamma mixture. Returns the weight of `Gamma(k+a₂, c)`; the
/// other component is `Gamma(k+a₂-1, c)`.
pub fn lambda_conditional_mixture(k: usize, psi: f64, hyper: &GammaHyper) -> (f64, f64) {
    let kf = k as f64;
    let a = kf + hyper.shape;
    let c = 1.0 - psi + hyper.rate;
    let ln_first = psi.ln() + ln_gamma(a) - a * c.ln();
    let ln_second = kf.ln() + ln_gamma(a - 1.0) - (a - 1.0) * c.ln();
    let w = 1.0 / (1.0 + (ln_second - ln_first).exp());
    (w, c)
}

/// Exact draw of `Λ` from [`lambda_conditional_mixture`].
pub fn update_lambda_conjugate<R: Rng + ?Sized>(k: usize, psi: f64, hyper: &GammaHyper, rng: &mut R) -> f64 {
    let (w, c) = lambda_conditional_mixture(k, psi, hyper);
    let shape = k as f64 + hyper.shape;
    if open01(rng) < w {
        gamma_rate(shape, c, rng)
    } else {
        gamma_rate(shape - 1.0, c, rng)
    }
}

/// One log-scale random-walk Metropolis step for a positive parameter.
pub(crate) fn mh_positive<R: Rng + ?Sized, F: Fn(f64) -> f64>(x: f64, target: F, tuning: &mut MhTuning, adapt: bool, rng: &mut R) -> f64 {
    let prop = x * (tuning.step() * std_normal(rng)).exp();
    let cur = target(x) + x.ln();
    let new = target(prop) + prop.ln();
    let accept = !new.is_nan() && (new - cur >= 0.0 || open01(rng).ln() < new - cur);
    tuning.record(accept, adapt);
    if accept {
        prop
    } else {
        x
    }
}

/// Updates the count prior's parameter given `(u, ρ)`: exact for the shifted
/// Poisson, Metropolis otherwise.
pub fn update_count_hyper<A, R: Rng + ?Sized>(
    state: &mut MixtureState<A>,
    hyper: &HyperPriors,
    tuning: &mut MhTuning,
    adapt: bool,
    rng: &mut R,
) {
    let Some(h) = hyper.lambda_prior else { return };
    let Some(cur) = state.prior.hyper_param() else { return };
    let next = match state.prior {
        ComponentCountPrior::ShiftedPoisson { .. } => update_lambda_conjugate(state.k(), state.family.psi(state.u), &h, rng),
        _ => {
            let (u, sizes, family, prior) = (state.u, &state.sizes, &state.family, state.prior);
            let target = |x: f64| log_partition_weight(u, sizes, family, &prior.with_hyper_param(x)) + h.ln_density(x);
            mh_positive(cur, target, tuning, adapt, rng)
        }
    };
    state.prior = state.prior.with_hyper_param(next);
}

/// Metropolis update of the jump family's shape given `(u, ρ)`, targeting
/// `Ψ(u,k) Π_j κ(n_j,u)` times the hyperprior.
pub fn update_family_hyper<A, R: Rng + ?Sized>(
    state: &mut MixtureState<A>,
    hyper: &HyperPriors,
    tuning: &mut MhTuning,
    adapt: bool,
    rng: &mut R,
) {
    let Some(h) = hyper.gamma_prior else { return };
    let Some(cur) = state.family.hyper_param() else { return };
    let (u, sizes, family, prior) = (state.u, &state.sizes, &state.family, &state.prior);
    let target = |x: f64| log_partition_weight(u, sizes, &family.with_hyper_param(x), prior) + h.ln_density(x);
    let next = mh_positive(cur, target, tuning, adapt, rng);
    state.family = state.family.with_hyper_param(next);
}
