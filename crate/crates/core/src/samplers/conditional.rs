use super::hyper::{update_count_hyper, update_family_hyper};
use super::{cluster_stats, HyperPriors, MixtureState, SamplerError, Tuning};
use crate::kernels::ObservationModel;
use crate::mathkit::log_sum_exp;
use crate::partition::Partition;
use crate::random::{categorical_ln_buf, ln_std_gamma};
use rand::Rng;

/// One blocked Gibbs sweep over `(u, c, hyperparameters, M^(na), S, τ)`:
///
/// 1. `u ~ Gamma(n, T)`;
/// 2. `P(c_i = m) ∝ S_m f(y_i | τ_m)` over all `M` components, then the
///    allocated components are moved to the front;
/// 3. hyperparameters given `(u, ρ)`;
/// 4. `M^(na)`, all jumps and all atoms given `(u, ρ)`.
pub fn gibbs_step_conditional<M: ObservationModel, R: Rng + ?Sized>(
    state: &mut MixtureState<M::Atom>,
    data: &[M::Obs],
    model: &M,
    hyper: &HyperPriors,
    tuning: &mut Tuning,
    rng: &mut R,
) -> Result<(), SamplerError> {
    let n = data.len();
    let ln_t = log_sum_exp(&state.ln_jumps);
    state.u = (ln_std_gamma(n as f64, rng) - ln_t).exp();

    let mut lw = vec![0.0; state.m()];
    let mut scratch = Vec::with_capacity(state.m());
    let raw: Vec<usize> = data
        .iter()
        .map(|y| {
            for ((w, &s), atom) in lw.iter_mut().zip(&state.ln_jumps).zip(&state.atoms) {
                *w = s + model.log_likelihood(y, atom);
            }
            categorical_ln_buf(&lw, &mut scratch, rng)
        })
        .collect();
    let p = Partition::from_labels(&raw);
    state.labels = p.labels().to_vec();
    state.sizes = p.sizes().to_vec();

    update_count_hyper(state, hyper, &mut tuning.lambda, tuning.adapting, rng);
    update_family_hyper(state, hyper, &mut tuning.gamma, tuning.adapting, rng);

    refresh_components(state, data, model, rng)
}

/// Draws `M^(na)` from its conditional law, then allocated jumps from the
/// gamma-tilted laws `s^{n_j} e^{-us} h(s)`, unallocated jumps from the
/// exponentially tilted law `e^{-us} h(s)`, allocated atoms from their
/// conjugate posteriors and unallocated atoms from the base measure.
pub(crate) fn refresh_components<M: ObservationModel, R: Rng + ?Sized>(
    state: &mut MixtureState<M::Atom>,
    data: &[M::Obs],
    model: &M,
    rng: &mut R,
) -> Result<(), SamplerError> {
    let k = state.k();
    let u = state.u;
    let law = state.prior.unallocated_law(k, state.family.ln_psi(u))?;
    let m_na = law.sample(rng);

    let mut ln_jumps = Vec::with_capacity(k + m_na);
    for &nj in &state.sizes {
        ln_jumps.push(state.family.sample_ln_gamma_tilted(nj, u, rng)?);
    }
    for _ in 0..m_na {
        ln_jumps.push(state.family.sample_ln_exp_tilted(u, rng)?);
    }

    let stats = cluster_stats(model, data, &state.labels, k);
    let mut atoms = Vec::with_capacity(k + m_na);
    for s in &stats {
        atoms.push(model.sample_posterior_atom(s, rng));
    }
    for _ in 0..m_na {
        atoms.push(model.sample_prior_atom(rng));
    }
    state.ln_jumps = ln_jumps;
    state.atoms = atoms;
    Ok(())
}
