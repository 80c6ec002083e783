use super::*;
use crate::diagnostics::{chi_square_gof, ks_one_sample, TraceStore};
use crate::kernels::{GaussianNig, KernelError};
use crate::mathkit::QuadratureSpec;
use crate::partition::log_prior_k_table;
use crate::random::substream;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Gamma};

/// A kernel that ignores the data, so the posterior over partitions is the prior.
struct Flat;

impl ObservationModel for Flat {
    type Obs = f64;
    type Atom = ();
    type Stats = usize;

    fn validate_obs(&self, y: &f64) -> Result<(), KernelError> {
        if y.is_finite() {
            Ok(())
        } else {
            Err(KernelError::InvalidObservation(format!("{y}")))
        }
    }
    fn empty_stats(&self) -> usize {
        0
    }
    fn add_obs(&self, s: &mut usize, _: &f64) {
        *s += 1;
    }
    fn remove_obs(&self, s: &mut usize, _: &f64) {
        *s -= 1;
    }
    fn log_likelihood(&self, _: &f64, _: &()) -> f64 {
        0.0
    }
    fn sample_prior_atom<R: Rng + ?Sized>(&self, _: &mut R) {}
    fn sample_posterior_atom<R: Rng + ?Sized>(&self, _: &usize, _: &mut R) {}
    fn log_predictive_stats(&self, _: &f64, _: &usize) -> f64 {
        0.0
    }
    fn sample_obs<R: Rng + ?Sized>(&self, _: &(), _: &mut R) -> f64 {
        0.0
    }
}

fn config(algorithm: Algorithm, iterations: usize, burn_in: usize, thin: usize, seed: u64) -> SamplerConfig {
    SamplerConfig { algorithm, iterations, burn_in, thin, seed, ..SamplerConfig::default() }
}

fn k_counts(trace: &TraceStore, n: usize) -> Vec<usize> {
    let mut c = vec![0usize; n];
    for &k in &trace.k {
        c[k - 1] += 1;
    }
    c
}

fn two_clusters() -> Vec<f64> {
    let mut rng = substream(11, 0, 0);
    (0..30)
        .map(|i| {
            let centre = if i % 3 == 0 { 6.0 } else { -2.0 };
            centre + crate::random::std_normal(&mut rng)
        })
        .collect()
}

#[test]
fn single_component_prior_forces_one_cluster() {
    let data = two_clusters();
    let model = GaussianNig::new(0.0, 0.01, 2.0, 1.0).unwrap();
    let family = JumpFamily::Gamma { gamma: 1.0 };
    let prior = ComponentCountPrior::Dirac { m_tilde: 1 };
    for alg in [Algorithm::Conditional, Algorithm::Marginal] {
        let t = run_chain(&data, &model, &family, &prior, &HyperPriors::default(), &config(alg, 300, 100, 1, 3), 0, &[], None).unwrap();
        assert_eq!(t.len(), 200);
        assert!(t.k.iter().all(|&k| k == 1) && t.m.iter().all(|&m| m == 1), "{alg:?}");
    }
}

#[test]
fn state_invariants_hold_every_sweep() {
    let data = two_clusters();
    let model = GaussianNig::new(0.0, 0.01, 2.0, 1.0).unwrap();
    let family = JumpFamily::Gamma { gamma: 0.5 };
    let prior = ComponentCountPrior::ShiftedPoisson { lambda: 4.0 };
    let hyper =
        HyperPriors { gamma_prior: Some(GammaHyper { shape: 2.0, rate: 2.0 }), lambda_prior: Some(GammaHyper { shape: 2.0, rate: 1.0 }) };
    for (i, step) in [gibbs_step_conditional::<GaussianNig, _>, gibbs_step_marginal::<GaussianNig, _>].iter().enumerate() {
        let mut rng = substream(4, i as u64, 0);
        let mut state = initial_state(&data, &model, &family, &prior, &hyper, &mut rng).unwrap();
        state.check().unwrap();
        let mut tuning = Tuning::from_config(&SamplerConfig::default());
        for _ in 0..300 {
            step(&mut state, &data, &model, &hyper, &mut tuning, &mut rng).unwrap();
            state.check().unwrap();
            assert!(state.family.hyper_param().unwrap() > 0.0);
            assert!(state.prior.hyper_param().unwrap() > 0.0);
        }
    }
}

fn flat_k_check(family: JumpFamily, prior: ComponentCountPrior, alg: Algorithm, seed: u64) {
    let n = 6;
    let data = vec![0.0; n];
    let exact: Vec<f64> = log_prior_k_table(n, &family, &prior, &QuadratureSpec::default()).unwrap().iter().map(|v| v.exp()).collect();
    let t = run_chain(&data, &Flat, &family, &prior, &HyperPriors::default(), &config(alg, 82_000, 2_000, 4, seed), 0, &[], None).unwrap();
    let counts = k_counts(&t, n);
    let p = chi_square_gof(&counts, &exact);
    assert!(p > 1e-3, "{family} {prior} {alg:?}: p = {p}, counts {counts:?}, exact {exact:?}");
}

#[test]
fn flat_likelihood_recovers_prior_of_k() {
    let poisson = ComponentCountPrior::ShiftedPoisson { lambda: 3.0 };
    flat_k_check(JumpFamily::Gamma { gamma: 0.7 }, poisson, Algorithm::Conditional, 1);
    flat_k_check(JumpFamily::Gamma { gamma: 0.7 }, poisson, Algorithm::Marginal, 2);
    let negbin = ComponentCountPrior::NegBin { p: 0.4, r: 2.0 };
    flat_k_check(JumpFamily::Bessel { alpha: 1.5, beta: 2.0 }, negbin, Algorithm::Conditional, 3);
    flat_k_check(JumpFamily::Uniform, ComponentCountPrior::Dirac { m_tilde: 4 }, Algorithm::Marginal, 4);
}

#[test]
fn hyperparameters_keep_their_prior_under_flat_likelihood() {
    // with no information in the data the stationary law of each
    // hyperparameter is its hyperprior
    let n = 5;
    let data = vec![0.0; n];
    let g = GammaHyper { shape: 3.0, rate: 2.0 };
    let l = GammaHyper { shape: 2.0, rate: 0.5 };
    let hyper = HyperPriors { gamma_prior: Some(g), lambda_prior: Some(l) };
    for (alg, prior) in [
        (Algorithm::Conditional, ComponentCountPrior::ShiftedPoisson { lambda: 1.0 }),
        (Algorithm::Marginal, ComponentCountPrior::NegBin { p: 0.5, r: 1.0 }),
    ] {
        let t =
            run_chain(&data, &Flat, &JumpFamily::Gamma { gamma: 1.0 }, &prior, &hyper, &config(alg, 210_000, 10_000, 50, 9), 0, &[], None)
                .unwrap();
        let gcdf = Gamma::new(g.shape, g.rate).unwrap();
        let lcdf = Gamma::new(l.shape, l.rate).unwrap();
        let pg = ks_one_sample(&t.gamma, |x| gcdf.cdf(x));
        let pl = ks_one_sample(&t.lambda, |x| lcdf.cdf(x));
        assert!(pg > 1e-3 && pl > 1e-3, "{alg:?}: gamma p = {pg}, count parameter p = {pl}");
    }
}

#[test]
fn lambda_mixture_matches_numerical_moments() {
    let h = GammaHyper { shape: 2.0, rate: 1.0 };
    for &(k, psi) in &[(1usize, 0.9), (3, 0.2), (8, 0.05), (2, 0.999)] {
        let target = |x: f64| (k as f64 - 1.0 + h.shape - 1.0) * x.ln() + (x * psi + k as f64).ln() - x * (1.0 - psi + h.rate);
        let (mut z, mut m1) = (0.0, 0.0);
        let dx = 1e-4;
        for i in 1..1_000_000 {
            let x = i as f64 * dx;
            let w = target(x).exp();
            z += w;
            m1 += w * x;
        }
        let numeric = m1 / z;
        let (w, c) = lambda_conditional_mixture(k, psi, &h);
        let a = k as f64 + h.shape;
        let mean = w * a / c + (1.0 - w) * (a - 1.0) / c;
        assert!((mean - numeric).abs() < 1e-6 * numeric, "k={k} psi={psi}: {mean} vs {numeric}");

        let mut rng = substream(6, k as u64, 0);
        let draws: f64 = (0..200_000).map(|_| update_lambda_conjugate(k, psi, &h, &mut rng)).sum::<f64>() / 200_000.0;
        let sd = ((w * a * (a + 1.0) + (1.0 - w) * (a - 1.0) * a) / (c * c) - mean * mean).sqrt();
        assert!((draws - mean).abs() < 5.0 * sd / 200_000f64.sqrt());
    }
}

#[test]
fn u_update_targets_its_conditional() {
    // marginal sampler with a flat kernel and a single-component prior:
    // u | ρ has density ∝ u^{n-1} Ψ(u,1) κ(n,u), i.e. Gamma(n, 1) rescaled by (1+u)^{-(γ+n)}
    let n = 4;
    let gamma = 1.5;
    let data = vec![0.0; n];
    let family = JumpFamily::Gamma { gamma };
    let prior = ComponentCountPrior::Dirac { m_tilde: 1 };
    let t = run_chain(
        &data,
        &Flat,
        &family,
        &prior,
        &HyperPriors::default(),
        &config(Algorithm::Marginal, 200_000, 5_000, 30, 12),
        0,
        &[],
        None,
    )
    .unwrap();
    // U/(1+U) ~ Beta(n, γ) under this density
    let beta = statrs::distribution::Beta::new(n as f64, gamma).unwrap();
    let v: Vec<f64> = t.u.iter().map(|u| u / (1.0 + u)).collect();
    let p = ks_one_sample(&v, |x| beta.cdf(x));
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn samplers_agree_on_gaussian_data() {
    let data = two_clusters();
    let model = GaussianNig::new(2.0, 0.05, 3.0, 1.0).unwrap();
    let family = JumpFamily::Gamma { gamma: 1.0 };
    let prior = ComponentCountPrior::ShiftedPoisson { lambda: 3.0 };
    let grid = vec![-2.0, 0.0, 2.0, 6.0];
    let run = |alg| {
        run_chain(&data, &model, &family, &prior, &HyperPriors::default(), &config(alg, 22_000, 2_000, 2, 21), 0, &grid, None).unwrap()
    };
    let a = run(Algorithm::Conditional);
    let b = run(Algorithm::Marginal);
    let mean_k = |t: &TraceStore| t.k.iter().sum::<usize>() as f64 / t.len() as f64;
    assert!((mean_k(&a) - mean_k(&b)).abs() < 0.15, "{} vs {}", mean_k(&a), mean_k(&b));
    let pa = crate::diagnostics::density_bands(&a.density);
    let pb = crate::diagnostics::density_bands(&b.density);
    for (x, y) in pa.iter().zip(&pb) {
        assert!((x.0 - y.0).abs() < 0.01 + 0.05 * x.0, "{pa:?} vs {pb:?}");
    }
    // the harmonic-mean LPML is too noisy at this length; compare mean log-likelihoods
    let ll = |t: &TraceStore| t.loglik.iter().sum::<f64>() / t.len() as f64;
    assert!((ll(&a) - ll(&b)).abs() < 0.3, "{} vs {}", ll(&a), ll(&b));
}

#[test]
fn same_seed_same_trace() {
    let data = two_clusters();
    let model = GaussianNig::new(0.0, 0.01, 2.0, 1.0).unwrap();
    let family = JumpFamily::Gamma { gamma: 1.0 };
    let prior = ComponentCountPrior::ShiftedPoisson { lambda: 3.0 };
    let hyper = HyperPriors { gamma_prior: Some(GammaHyper { shape: 1.0, rate: 1.0 }), lambda_prior: None };
    let c = config(Algorithm::Conditional, 500, 100, 2, 77);
    let a = run_chain(&data, &model, &family, &prior, &hyper, &c, 1, &[], None).unwrap();
    let b = run_chain(&data, &model, &family, &prior, &hyper, &c, 1, &[], None).unwrap();
    assert_eq!(a.u, b.u);
    assert_eq!(a.alloc, b.alloc);
    let other = run_chain(&data, &model, &family, &prior, &hyper, &c, 2, &[], None).unwrap();
    assert_ne!(a.u, other.u);
    let many = run_chains(&data, &model, &family, &prior, &hyper, &c, 3, 2, &[], None);
    assert_eq!(many[1].as_ref().unwrap().u, a.u);
}

#[test]
fn empty_trace_and_bad_config() {
    let data = two_clusters();
    let model = GaussianNig::new(0.0, 0.01, 2.0, 1.0).unwrap();
    let family = JumpFamily::Gamma { gamma: 1.0 };
    let prior = ComponentCountPrior::ShiftedPoisson { lambda: 3.0 };
    let none = HyperPriors::default();
    let t = run_chain(&data, &model, &family, &prior, &none, &config(Algorithm::Marginal, 50, 50, 1, 1), 0, &[], None).unwrap();
    assert!(t.is_empty());
    assert!(run_chain(&data, &model, &family, &prior, &none, &config(Algorithm::Marginal, 40, 50, 1, 1), 0, &[], None).is_err());
    assert!(run_chain(&data, &model, &family, &prior, &none, &config(Algorithm::Marginal, 40, 0, 0, 1), 0, &[], None).is_err());
    assert!(run_chain(&[], &model, &family, &prior, &none, &config(Algorithm::Marginal, 40, 0, 1, 1), 0, &[], None).is_err());
    let bad = HyperPriors { gamma_prior: Some(GammaHyper { shape: 1.0, rate: 1.0 }), lambda_prior: None };
    let r = run_chain(&data, &model, &JumpFamily::Uniform, &prior, &bad, &config(Algorithm::Marginal, 40, 0, 1, 1), 0, &[], None);
    assert!(matches!(r, Err(SamplerError::Config(_))));
}

#[test]
fn fdmm_predictive_weight_ratio() {
    // Gamma(γ,1) jumps: κ(m+1,u)/κ(m,u) = (γ+m)/(1+u)
    let gamma = 0.8;
    let f = JumpFamily::Gamma { gamma };
    for &(m, u) in &[(1usize, 0.3), (5, 2.0), (40, 17.0)] {
        let r = (f.ln_kappa(m + 1, u) - f.ln_kappa(m, u)).exp();
        assert!((r - (gamma + m as f64) / (1.0 + u)).abs() < 1e-12 * r);
    }
    // and the joint weight is Ψ(u,k) Π κ(n_j,u)
    let prior = ComponentCountPrior::ShiftedPoisson { lambda: 2.0 };
    let w = log_partition_weight(1.3, &[2, 1], &f, &prior);
    let expect = prior.log_big_psi(2, f.ln_psi(1.3)) + f.ln_kappa(2, 1.3) + f.ln_kappa(1, 1.3);
    assert!((w - expect).abs() < 1e-14);
}

#[test]
fn prior_draws_are_well_formed() {
    let model = GaussianNig::new(0.0, 0.1, 3.0, 1.0).unwrap();
    let family = JumpFamily::Gamma { gamma: 1.0 };
    let prior = ComponentCountPrior::ShiftedPoisson { lambda: 5.0 };
    let hyper = HyperPriors { gamma_prior: Some(GammaHyper { shape: 2.0, rate: 2.0 }), lambda_prior: None };
    let mut rng = substream(8, 0, 0);
    for _ in 0..200 {
        let (s, y) = draw_prior_state(25, &model, &family, &prior, &hyper, &mut rng).unwrap();
        s.check().unwrap();
        assert_eq!(y.len(), 25);
        let y2 = resimulate_data(&s, &model, &mut rng);
        assert_eq!(y2.len(), 25);
    }
}
