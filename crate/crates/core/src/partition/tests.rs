use super::*;
use crate::random::substream;
use proptest::prelude::*;
use std::collections::HashMap;

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn eppf(sizes: &[usize], family: &JumpFamily, prior: &ComponentCountPrior) -> f64 {
    log_eppf(&EppfQuery { sizes, family, prior, quad: &quad() }).unwrap()
}

#[test]
fn partition_canonical_form() {
    let p = Partition::from_labels(&[7, 3, 7, 9, 3]);
    assert_eq!(p.labels(), &[0, 1, 0, 2, 1]);
    assert_eq!(p.sizes(), &[2, 2, 1]);
    assert_eq!((p.n(), p.k()), (5, 3));
    assert_eq!(p.size_key(), vec![2, 2, 1]);
}

#[test]
fn eppf_examples() {
    let fam = JumpFamily::Gamma { gamma: 1.0 };
    let prior = ComponentCountPrior::ShiftedPoisson { lambda: 2.0 };
    assert_eq!(eppf(&[1], &JumpFamily::Uniform, &prior), 0.0);
    for n in 2..7 {
        for &g in &[0.3, 1.0, 4.0] {
            let v = eppf(&[n], &JumpFamily::Gamma { gamma: g }, &ComponentCountPrior::Dirac { m_tilde: 1 });
            assert!(v.abs() < 1e-12);
        }
    }
    let total = total_eppf_mass(3, &fam, &prior, &quad()).unwrap();
    assert!((total - 1.0).abs() < 1e-6);
    assert!(log_eppf(&EppfQuery { sizes: &[2, 0], family: &fam, prior: &prior, quad: &quad() }).is_err());
}

#[test]
fn fdmm_examples() {
    let q = quad();
    let v = log_eppf_fdmm(&[1, 1], 1.0, &ComponentCountPrior::Dirac { m_tilde: 2 }, &q).unwrap();
    assert!((v.exp() - 1.0 / 3.0).abs() < 1e-14);
    // Dirichlet-multinomial check: two draws from Dir(1,1) weights land in different components
    // with probability 2·E[w(1-w)] = 1/3, and that event is the partition {1},{2}
    let p = ComponentCountPrior::ShiftedPoisson { lambda: 1.0 };
    let a = log_eppf_fdmm(&[2, 1], 1.0, &p, &q).unwrap();
    let b = eppf(&[2, 1], &JumpFamily::Gamma { gamma: 1.0 }, &p);
    assert!((a - b).abs() < 1e-8);
}

#[test]
fn fdmm_route_matches_generic_quadrature() {
    let q = quad();
    for prior in [
        ComponentCountPrior::ShiftedPoisson { lambda: 1.0 },
        ComponentCountPrior::ShiftedPoisson { lambda: 7.0 },
        ComponentCountPrior::NegBin { p: 0.5, r: 2.0 },
        ComponentCountPrior::NegBin { p: 0.3, r: 0.5 },
        ComponentCountPrior::Dirac { m_tilde: 4 },
    ] {
        for &g in &[0.5, 1.0, 2.5] {
            let fam = JumpFamily::Gamma { gamma: g };
            for sizes in [vec![1, 1], vec![3, 1], vec![2, 2, 1], vec![4, 1, 1, 1]] {
                let closed = log_eppf_fdmm(&sizes, g, &prior, &q).unwrap();
                let generic = integrate_halfline(|u| log_joint_u(u, &sizes, &fam, &prior), &q).unwrap();
                if closed == f64::NEG_INFINITY {
                    assert_eq!(generic, f64::NEG_INFINITY);
                } else {
                    assert!((closed - generic).exp_m1().abs() < 1e-8, "{prior} g={g} {sizes:?}");
                }
            }
        }
    }
}

#[test]
fn eppf_normalization_small_grid() {
    let q = quad();
    let families = [
        JumpFamily::Gamma { gamma: 0.5 },
        JumpFamily::Uniform,
        JumpFamily::Bessel { alpha: 1.0, beta: 1.5 },
        JumpFamily::SigmaStable { sigma: 0.5 },
    ];
    let priors = [
        ComponentCountPrior::ShiftedPoisson { lambda: 2.0 },
        ComponentCountPrior::NegBin { p: 0.5, r: 2.0 },
        ComponentCountPrior::Dirac { m_tilde: 3 },
    ];
    for fam in &families {
        for prior in &priors {
            let total = total_eppf_mass(4, fam, prior, &q).unwrap();
            assert!((total - 1.0).abs() < 1e-5, "{fam} {prior}: {total}");
        }
    }
}

#[test]
fn eppf_consistency_under_marginalization() {
    let fam = JumpFamily::Bessel { alpha: 1.0, beta: 1.5 };
    let prior = ComponentCountPrior::NegBin { p: 0.5, r: 2.0 };
    for n in 1..=3 {
        for sizes in integer_partitions(n) {
            let lhs = eppf(&sizes, &fam, &prior).exp();
            let mut rhs = 0.0;
            for j in 0..sizes.len() {
                let mut s = sizes.clone();
                s[j] += 1;
                rhs += eppf(&s, &fam, &prior).exp();
            }
            let mut s = sizes.clone();
            s.push(1);
            rhs += eppf(&s, &fam, &prior).exp();
            assert!((lhs - rhs).abs() < 1e-6, "{sizes:?}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn eppf_symmetric_in_sizes() {
    let fam = JumpFamily::Uniform;
    let prior = ComponentCountPrior::ShiftedPoisson { lambda: 3.0 };
    let a = eppf(&[3, 1, 2], &fam, &prior);
    let b = eppf(&[1, 2, 3], &fam, &prior);
    let c = eppf(&[2, 3, 1], &fam, &prior);
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn prior_k_examples() {
    let q = quad();
    let fam = JumpFamily::Gamma { gamma: 0.5 };
    let prior = ComponentCountPrior::ShiftedPoisson { lambda: 2.0 };
    assert_eq!(log_prior_k(1, 1, &fam, &prior, &q).unwrap(), 0.0);
    let d1 = ComponentCountPrior::Dirac { m_tilde: 1 };
    assert!(log_prior_k(5, 1, &fam, &d1, &q).unwrap().abs() < 1e-10);
    assert_eq!(log_prior_k(5, 2, &fam, &d1, &q).unwrap(), f64::NEG_INFINITY);
    let total: f64 = (1..=6).map(|k| log_prior_k(6, k, &fam, &prior, &q).unwrap().exp()).sum();
    assert!((total - 1.0).abs() < 1e-6);
}

#[test]
fn prior_k_stirling_route_matches_bell_route() {
    let q = quad();
    for prior in [
        ComponentCountPrior::ShiftedPoisson { lambda: 1.0 },
        ComponentCountPrior::Dirac { m_tilde: 3 },
        ComponentCountPrior::NegBin { p: 0.4, r: 3.0 },
    ] {
        for &g in &[0.3, 1.0] {
            let fam = JumpFamily::Gamma { gamma: g };
            for n in [3usize, 5] {
                for k in 1..=n {
                    let a = log_prior_k(n, k, &fam, &prior, &q).unwrap();
                    let b = log_prior_k_fdmm(n, k, g, &prior, &q).unwrap();
                    if a == f64::NEG_INFINITY {
                        assert_eq!(b, f64::NEG_INFINITY);
                    } else {
                        assert!((a.exp() - b.exp()).abs() < 1e-8, "{prior} g={g} n={n} k={k}");
                    }
                }
            }
        }
    }
    // diagonal: S^{-1,γ}_{n,n} = 1
    let p = ComponentCountPrior::ShiftedPoisson { lambda: 2.0 };
    let v = log_v_fdmm(4, 4, 0.7, &p, &q).unwrap();
    assert!((log_prior_k_fdmm(4, 4, 0.7, &p, &q).unwrap() - (v + 4.0 * 0.7f64.ln())).abs() < 1e-12);
}

#[test]
fn prior_simulation_examples() {
    let mut rng = substream(31, 0, 0);
    let fam = JumpFamily::Gamma { gamma: 1.0 };
    for _ in 0..50 {
        let p = simulate_prior_partition(6, &fam, &ComponentCountPrior::Dirac { m_tilde: 1 }, &mut rng).unwrap();
        assert_eq!(p.k(), 1);
        let p = simulate_prior_partition(1, &fam, &ComponentCountPrior::ShiftedPoisson { lambda: 3.0 }, &mut rng).unwrap();
        assert_eq!(p.k(), 1);
    }
}

#[test]
fn prior_simulation_matches_eppf() {
    let mut rng = substream(37, 0, 0);
    let fam = JumpFamily::Gamma { gamma: 1.0 };
    let prior = ComponentCountPrior::ShiftedPoisson { lambda: 2.0 };
    let draws = 200_000;
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for _ in 0..draws {
        let p = simulate_prior_partition(4, &fam, &prior, &mut rng).unwrap();
        *counts.entry(p.labels().to_vec()).or_default() += 1;
    }
    for labels in set_partitions(4) {
        let p = Partition::from_labels(&labels);
        let exact = eppf(p.sizes(), &fam, &prior).exp();
        let freq = *counts.get(&labels).unwrap_or(&0) as f64 / draws as f64;
        let se = (exact * (1.0 - exact) / draws as f64).sqrt();
        assert!((freq - exact).abs() < 4.0 * se, "{labels:?}: {freq} vs {exact}");
    }
}

#[test]
fn dp_limit_examples() {
    let q = quad();
    let d4 = dp_limit_check(1.0, 1e4, 5, &q).unwrap();
    let d3 = dp_limit_check(1.0, 1e3, 5, &q).unwrap();
    let d2 = dp_limit_check(1.0, 1e2, 5, &q).unwrap();
    assert!(d4 < 0.01, "{d4}");
    assert!(d4 < d3 && d3 < d2);
    assert!(dp_limit_check(1.0, 1e2, 3, &q).unwrap() < 0.1);
}

proptest! {
    #[test]
    fn canonical_labels_invariants(raw in proptest::collection::vec(0usize..6, 1..30)) {
        let p = Partition::from_labels(&raw);
        prop_assert_eq!(p.sizes().iter().sum::<usize>(), raw.len());
        prop_assert!(p.sizes().iter().all(|&s| s >= 1));
        let mut seen = 0;
        for &l in p.labels() {
            prop_assert!(l <= seen);
            if l == seen { seen += 1; }
        }
        prop_assert_eq!(seen, p.k());
        // relabeling the raw ids does not change the canonical form
        let shifted: Vec<usize> = raw.iter().map(|r| 100 - r).collect();
        prop_assert_eq!(Partition::from_labels(&shifted), p);
    }
}
