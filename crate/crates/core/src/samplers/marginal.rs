use super::conditional::refresh_components;
use super::hyper::{log_partition_weight, mh_positive, update_count_hyper, update_family_hyper};
use super::{cluster_stats, HyperPriors, MixtureState, SamplerError, Tuning};
use crate::kernels::ObservationModel;
use crate::partition::Partition;
use crate::random::categorical_ln_buf;
use rand::Rng;

/// One sweep of the marginal sampler, with jumps and unallocated components
/// integrated out given `u`:
///
/// 1. each datum is removed and reassigned to cluster `j` with weight
///    `κ(n_j+1,u)/κ(n_j,u)` times its predictive under cluster `j`, or to a
///    new cluster with weight `Ψ(u,k+1)/Ψ(u,k) κ(1,u)` times its prior
///    predictive;
/// 2. `u` by a log-scale random-walk Metropolis step targeting
///    `u^{n-1} Ψ(u,k) Π_j κ(n_j,u)`;
/// 3. hyperparameters given `(u, ρ)`.
///
/// The remaining components are then drawn from their conditional laws so the
/// state can be reported like a conditional-sampler state.
pub fn gibbs_step_marginal<M: ObservationModel, R: Rng + ?Sized>(
    state: &mut MixtureState<M::Atom>,
    data: &[M::Obs],
    model: &M,
    hyper: &HyperPriors,
    tuning: &mut Tuning,
    rng: &mut R,
) -> Result<(), SamplerError> {
    let n = data.len();
    let u = state.u;
    let ln_kappa: Vec<f64> = (0..=n).map(|m| state.family.ln_kappa(m, u)).collect();
    let ln_psi = ln_kappa[0];
    let ln_big_psi: Vec<f64> = (0..=n).map(|k| if k == 0 { f64::NAN } else { state.prior.log_big_psi(k, ln_psi) }).collect();

    let mut labels = state.labels.clone();
    let mut sizes = state.sizes.clone();
    let mut stats = cluster_stats(model, data, &labels, sizes.len());
    let empty = model.empty_stats();
    let mut lw = Vec::with_capacity(n + 1);
    let mut scratch = Vec::with_capacity(n + 1);

    for (i, y) in data.iter().enumerate() {
        let c = labels[i];
        model.remove_obs(&mut stats[c], y);
        sizes[c] -= 1;
        if sizes[c] == 0 {
            let last = sizes.len() - 1;
            stats.swap_remove(c);
            sizes.swap_remove(c);
            if c != last {
                labels.iter_mut().filter(|l| **l == last).for_each(|l| *l = c);
            }
        }
        let k = sizes.len();
        let chosen = if k == 0 {
            0
        } else {
            lw.clear();
            for (s, &nj) in stats.iter().zip(&sizes) {
                lw.push(ln_kappa[nj + 1] - ln_kappa[nj] + model.log_predictive_stats(y, s));
            }
            lw.push(ln_big_psi[k + 1] - ln_big_psi[k] + ln_kappa[1] + model.log_predictive_stats(y, &empty));
            categorical_ln_buf(&lw, &mut scratch, rng)
        };
        if chosen == k {
            stats.push(empty.clone());
            sizes.push(0);
        }
        model.add_obs(&mut stats[chosen], y);
        sizes[chosen] += 1;
        labels[i] = chosen;
    }
    let p = Partition::from_labels(&labels);
    state.labels = p.labels().to_vec();
    state.sizes = p.sizes().to_vec();

    let (sizes, family, prior) = (&state.sizes, &state.family, &state.prior);
    let target = |v: f64| (n as f64 - 1.0) * v.ln() + log_partition_weight(v, sizes, family, prior);
    state.u = mh_positive(state.u, target, &mut tuning.u, tuning.adapting, rng);

    update_count_hyper(state, hyper, &mut tuning.lambda, tuning.adapting, rng);
    update_family_hyper(state, hyper, &mut tuning.gamma, tuning.adapting, rng);

    refresh_components(state, data, model, rng)
}
