use super::{
    cluster_stats, gibbs_step_conditional, gibbs_step_marginal, Algorithm, HyperPriors, MixtureState, SamplerConfig, SamplerError, Tuning,
};
use crate::counts::ComponentCountPrior;
use crate::diagnostics::{Acceptance, TraceStore};
use crate::jumps::JumpFamily;
use crate::kernels::ObservationModel;
use crate::mathkit::log_sum_exp;
use crate::partition::Partition;
use crate::random::{categorical_ln_buf, ln_std_gamma, stream, substream};
use rand::Rng;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Extra per-iteration record computed from the state, such as locus
/// relevances for genotype data.
pub type Observer<'a, A> = &'a (dyn Fn(&MixtureState<A>) -> Vec<f64> + Sync);

pub fn validate_inputs<M: ObservationModel>(
    data: &[M::Obs],
    model: &M,
    family: &JumpFamily,
    prior: &ComponentCountPrior,
    hyper: &HyperPriors,
) -> Result<(), SamplerError> {
    if data.is_empty() {
        return Err(SamplerError::Config("no observations".into()));
    }
    for (i, y) in data.iter().enumerate() {
        model.validate_obs(y).map_err(|e| SamplerError::Config(format!("observation {}: {e}", i + 1)))?;
    }
    family.validate()?;
    prior.validate()?;
    hyper.validate(family, prior)
}

fn with_hyper_means(family: &JumpFamily, prior: &ComponentCountPrior, hyper: &HyperPriors) -> (JumpFamily, ComponentCountPrior) {
    let family = match hyper.gamma_prior {
        Some(h) => family.with_hyper_param(h.mean()),
        None => family.clone(),
    };
    let prior = match hyper.lambda_prior {
        Some(h) => prior.with_hyper_param(h.mean()),
        None => *prior,
    };
    (family, prior)
}

/// Starting state: labels uniform over `⌈√n⌉` components (capped by a Dirac
/// prior's `M̃`), jumps from `h`, atoms from their conjugate posteriors,
/// `u ~ Gamma(n, T)` and hyperparameters at their prior means.
pub fn initial_state<M: ObservationModel, R: Rng + ?Sized>(
    data: &[M::Obs],
    model: &M,
    family: &JumpFamily,
    prior: &ComponentCountPrior,
    hyper: &HyperPriors,
    rng: &mut R,
) -> Result<MixtureState<M::Atom>, SamplerError> {
    let n = data.len();
    let (family, prior) = with_hyper_means(family, prior, hyper);
    let mut k0 = (n as f64).sqrt().ceil() as usize;
    if let ComponentCountPrior::Dirac { m_tilde } = prior {
        k0 = k0.min(m_tilde);
    }
    let raw: Vec<usize> = (0..n).map(|_| rng.random_range(0..k0.max(1))).collect();
    let p = Partition::from_labels(&raw);
    let stats = cluster_stats(model, data, p.labels(), p.k());
    let ln_jumps: Vec<f64> = (0..p.k()).map(|_| family.sample_ln_jump(rng)).collect::<Result<_, _>>()?;
    let atoms = stats.iter().map(|s| model.sample_posterior_atom(s, rng)).collect();
    let u = (ln_std_gamma(n as f64, rng) - log_sum_exp(&ln_jumps)).exp();
    Ok(MixtureState { u, labels: p.labels().to_vec(), sizes: p.sizes().to_vec(), ln_jumps, atoms, family, prior })
}

/// Joint draw of a complete state and `n` observations from the prior, with
/// hyperparameters drawn from their hyperpriors when present.
pub fn draw_prior_state<M: ObservationModel, R: Rng + ?Sized>(
    n: usize,
    model: &M,
    family: &JumpFamily,
    prior: &ComponentCountPrior,
    hyper: &HyperPriors,
    rng: &mut R,
) -> Result<(MixtureState<M::Atom>, Vec<M::Obs>), SamplerError> {
    let family = match hyper.gamma_prior {
        Some(h) => family.with_hyper_param(crate::random::gamma_rate(h.shape, h.rate, rng)),
        None => family.clone(),
    };
    let prior = match hyper.lambda_prior {
        Some(h) => prior.with_hyper_param(crate::random::gamma_rate(h.shape, h.rate, rng)),
        None => *prior,
    };
    let m = prior.sample_m(rng);
    let ln_jumps: Vec<f64> = (0..m).map(|_| family.sample_ln_jump(rng)).collect::<Result<_, _>>()?;
    let atoms: Vec<M::Atom> = (0..m).map(|_| model.sample_prior_atom(rng)).collect();
    let mut scratch = Vec::with_capacity(m);
    let raw: Vec<usize> = (0..n).map(|_| categorical_ln_buf(&ln_jumps, &mut scratch, rng)).collect();
    let data: Vec<M::Obs> = raw.iter().map(|&c| model.sample_obs(&atoms[c], rng)).collect();

    // allocated components first, in order of first appearance
    let mut order: Vec<usize> = Vec::with_capacity(m);
    let mut seen = vec![false; m];
    for &c in &raw {
        if !seen[c] {
            seen[c] = true;
            order.push(c);
        }
    }
    order.extend((0..m).filter(|&c| !seen[c]));
    let p = Partition::from_labels(&raw);
    let u = (ln_std_gamma(n as f64, rng) - log_sum_exp(&ln_jumps)).exp();
    let state = MixtureState {
        u,
        labels: p.labels().to_vec(),
        sizes: p.sizes().to_vec(),
        ln_jumps: order.iter().map(|&c| ln_jumps[c]).collect(),
        atoms: order.iter().map(|&c| atoms[c].clone()).collect(),
        family,
        prior,
    };
    Ok((state, data))
}

/// Fresh observations `y_i ~ f(· | τ_{c_i})` given the state.
pub fn resimulate_data<M: ObservationModel, R: Rng + ?Sized>(state: &MixtureState<M::Atom>, model: &M, rng: &mut R) -> Vec<M::Obs> {
    state.labels.iter().map(|&c| model.sample_obs(&state.atoms[c], rng)).collect()
}

fn record<M: ObservationModel>(
    trace: &mut TraceStore,
    iteration: usize,
    state: &MixtureState<M::Atom>,
    data: &[M::Obs],
    model: &M,
    grid: &[M::Obs],
    observer: Option<Observer<'_, M::Atom>>,
) {
    let log_pred: Vec<f64> = data.iter().zip(&state.labels).map(|(y, &c)| model.log_likelihood(y, &state.atoms[c])).collect();
    trace.iteration.push(iteration);
    trace.k.push(state.k());
    trace.m.push(state.m());
    trace.m_na.push(state.m_na());
    trace.u.push(state.u);
    trace.gamma.push(state.family.hyper_param().unwrap_or(f64::NAN));
    trace.lambda.push(state.prior.hyper_param().unwrap_or(f64::NAN));
    trace.loglik.push(log_pred.iter().sum());
    trace.log_pred.push(log_pred);
    trace.alloc.push(state.labels.clone());
    if !grid.is_empty() {
        let ln_t = log_sum_exp(&state.ln_jumps);
        let dens = grid
            .iter()
            .map(|x| state.ln_jumps.iter().zip(&state.atoms).map(|(&s, a)| (s - ln_t + model.log_likelihood(x, a)).exp()).sum())
            .collect();
        trace.density.push(dens);
    }
    if let Some(f) = observer {
        trace.relevance.push(f(state));
    }
}

/// Runs one chain and records every `thin`-th sweep after burn-in.
#[allow(clippy::too_many_arguments)]
pub fn run_chain<M: ObservationModel>(
    data: &[M::Obs],
    model: &M,
    family: &JumpFamily,
    prior: &ComponentCountPrior,
    hyper: &HyperPriors,
    config: &SamplerConfig,
    chain: u64,
    grid: &[M::Obs],
    observer: Option<Observer<'_, M::Atom>>,
) -> Result<TraceStore, SamplerError> {
    config.validate()?;
    validate_inputs(data, model, family, prior, hyper)?;
    let mut init_rng = substream(config.seed, chain, stream::INIT);
    let mut state = initial_state(data, model, family, prior, hyper, &mut init_rng)?;
    let mut rng = substream(config.seed, chain, stream::SAMPLER);
    let mut tuning = Tuning::from_config(config);
    let mut trace = TraceStore::default();
    for t in 1..=config.iterations {
        tuning.adapting = config.adapt && t <= config.burn_in;
        let step = match config.algorithm {
            Algorithm::Conditional => gibbs_step_conditional(&mut state, data, model, hyper, &mut tuning, &mut rng),
            Algorithm::Marginal => gibbs_step_marginal(&mut state, data, model, hyper, &mut tuning, &mut rng),
        };
        step.map_err(|e| SamplerError::AtIteration { iteration: t, source: Box::new(e) })?;
        if t == config.burn_in {
            tuning.u.reset_counts();
            tuning.gamma.reset_counts();
            tuning.lambda.reset_counts();
        }
        if t > config.burn_in && (t - config.burn_in).is_multiple_of(config.thin) {
            record(&mut trace, t, &state, data, model, grid, observer);
        }
    }
    trace.acceptance =
        Acceptance { u: tuning.u.acceptance_rate(), gamma: tuning.gamma.acceptance_rate(), lambda: tuning.lambda.acceptance_rate() };
    Ok(trace)
}

/// Runs `chains` independent chains on at most `threads` workers; chain `c`
/// uses the RNG substreams of chain id `c`.
#[allow(clippy::too_many_arguments)]
pub fn run_chains<M: ObservationModel>(
    data: &[M::Obs],
    model: &M,
    family: &JumpFamily,
    prior: &ComponentCountPrior,
    hyper: &HyperPriors,
    config: &SamplerConfig,
    chains: usize,
    threads: usize,
    grid: &[M::Obs],
    observer: Option<Observer<'_, M::Atom>>,
) -> Vec<Result<TraceStore, SamplerError>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<TraceStore, SamplerError>>>> = Mutex::new(vec![None; chains]);
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, chains.max(1)) {
            scope.spawn(|| loop {
                let c = next.fetch_add(1, Ordering::SeqCst);
                if c >= chains {
                    break;
                }
                let r = run_chain(data, model, family, prior, hyper, config, c as u64, grid, observer);
                results.lock().expect("results lock")[c] = Some(r);
            });
        }
    });
    results.into_inner().expect("results lock").into_iter().map(|r| r.expect("every chain ran")).collect()
}
