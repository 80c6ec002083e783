use super::*;
use crate::random::substream;

fn families() -> Vec<JumpFamily> {
    vec![
        JumpFamily::Gamma { gamma: 1.0 },
        JumpFamily::Gamma { gamma: 0.3 },
        JumpFamily::Uniform,
        "gammamix:2,1,0.05".parse().unwrap(),
        JumpFamily::SigmaStable { sigma: 0.5 },
        JumpFamily::SigmaStable { sigma: 0.2 },
        JumpFamily::Bessel { alpha: 1.0, beta: 1.0 },
        JumpFamily::Bessel { alpha: 2.5, beta: 1.5 },
    ]
}

/// Richardson-extrapolated central difference of `f` at `u` with step `h`.
fn richardson_derivative(f: &dyn Fn(f64) -> f64, u: f64, h: f64) -> f64 {
    let d = |h: f64| (f(u + h) - f(u - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

#[test]
fn psi_examples() {
    assert!((JumpFamily::Gamma { gamma: 1.0 }.psi(1.0) - 0.5).abs() < 1e-15);
    assert!((JumpFamily::SigmaStable { sigma: 0.5 }.psi(4.0) - (-2f64).exp()).abs() < 1e-15);
    for f in families() {
        assert!((f.psi(0.0) - 1.0).abs() < 1e-14, "{f}");
    }
}

#[test]
fn kappa_examples() {
    assert!((JumpFamily::Gamma { gamma: 1.0 }.kappa(1, 0.0) - 1.0).abs() < 1e-15);
    assert!((JumpFamily::Uniform.kappa(1, 0.0) - 0.5).abs() < 1e-15);
    for n in 1..6 {
        assert!((JumpFamily::Uniform.kappa(n, 0.0) - 1.0 / (n as f64 + 1.0)).abs() < 1e-15);
    }
    let b = JumpFamily::Bessel { alpha: 1.0, beta: 1.0 };
    let fd = -richardson_derivative(&|x| b.psi(x), 1.0, 1e-3);
    assert!((b.kappa(1, 1.0) - fd).abs() < 1e-8 * fd);
}

#[test]
fn uniform_psi_matches_integral_definition() {
    // ∫₀¹ e^{-us} ds = (1 - e^{-u}) / u, continuous across the series switch
    for &u in &[1e-6, 9.9e-5, 1e-4, 1.01e-4, 0.5, 3.0, 40.0] {
        let exact = -(-u as f64).exp_m1() / u;
        assert!((JumpFamily::Uniform.psi(u) - exact).abs() < 1e-14 * exact, "u={u}");
    }
}

#[test]
fn laplace_consistency_of_kappa() {
    for fam in families() {
        for &u in &[0.1, 1.0, 5.0] {
            for n in 1..=4 {
                let prev = |x: f64| fam.kappa(n - 1, x);
                let fd = -richardson_derivative(&prev, u, 1e-3);
                let k = fam.kappa(n, u);
                assert!((k - fd).abs() <= 1e-4 * k.abs(), "{fam} n={n} u={u}: {k} vs {fd}");
            }
        }
    }
}

#[test]
fn psi_decreasing() {
    for fam in families() {
        let mut last = fam.psi(0.0);
        for i in 1..50 {
            let p = fam.psi(i as f64 * 0.37);
            assert!(p < last, "{fam}");
            last = p;
        }
    }
}

#[test]
fn stable_kappa_first_moment_identity() {
    let s = 0.4;
    let fam = JumpFamily::SigmaStable { sigma: s };
    for &u in &[0.2f64, 1.0, 7.0] {
        let exact = s * u.powf(s - 1.0) * (-u.powf(s)).exp();
        assert!((fam.kappa(1, u) - exact).abs() < 1e-14 * exact);
    }
}

#[test]
fn gamma_mixture_converges_to_gamma() {
    let exact = JumpFamily::Gamma { gamma: 2.0 };
    let mut errs = Vec::new();
    for &eps in &[0.1, 0.01] {
        let approx: JumpFamily = format!("gammamix:2,1,{eps}").parse().unwrap();
        let err = (0..=50)
            .map(|i| {
                let u = i as f64 * 0.1;
                (approx.psi(u) - exact.psi(u)).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 2.0 * eps, "eps={eps}: {err}");
        errs.push(err);
    }
    assert!(errs[1] < errs[0] / 5.0);
}

#[test]
fn gamma_mixture_rejects_infinite_origin() {
    assert!("gammamix:0.5,1,0.1".parse::<JumpFamily>().is_err());
    assert!("gammamix-lognormal:0,1,0.05".parse::<JumpFamily>().is_ok());
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn tilted_sampler_moments() {
    let mut rng = substream(2024, 0, 0);
    let draws = 100_000;
    for fam in families() {
        for &(n, u) in &[(0usize, 0.7f64), (1, 0.5), (3, 2.0)] {
            let xs: Vec<f64> = (0..draws).map(|_| fam.sample_gamma_tilted(n, u, &mut rng).unwrap()).collect();
            let (m, se) = mean_and_se(&xs);
            let exact = (fam.ln_kappa(n + 1, u) - fam.ln_kappa(n, u)).exp();
            assert!((m - exact).abs() < 4.0 * se, "{fam} n={n} u={u}: {m} vs {exact} (se {se})");
        }
    }
}

#[test]
fn spec_sampler_examples() {
    let mut rng = substream(99, 0, 0);
    let n = 100_000;
    let g = JumpFamily::Gamma { gamma: 2.0 };
    let (m, se) = mean_and_se(&(0..n).map(|_| g.sample_exp_tilted(1.0, &mut rng).unwrap()).collect::<Vec<_>>());
    assert!((m - 1.0).abs() < 4.0 * se);
    let (m, se) = mean_and_se(&(0..n).map(|_| JumpFamily::Uniform.sample_exp_tilted(1e-320, &mut rng).unwrap()).collect::<Vec<_>>());
    assert!((m - 0.5).abs() < 4.0 * se);
    let g1 = JumpFamily::Gamma { gamma: 1.0 };
    let (m, se) = mean_and_se(&(0..n).map(|_| g1.sample_gamma_tilted(2, 0.0, &mut rng).unwrap()).collect::<Vec<_>>());
    assert!((m - 3.0).abs() < 4.0 * se);
    let b = JumpFamily::Bessel { alpha: 1.0, beta: 1.0 };
    let (m, se) = mean_and_se(&(0..n).map(|_| b.sample_gamma_tilted(3, 0.5, &mut rng).unwrap()).collect::<Vec<_>>());
    let exact = b.kappa(4, 0.5) / b.kappa(3, 0.5);
    assert!((m - exact).abs() < 3.5 * se);
}

#[test]
fn untilted_means_and_stable_laplace() {
    let mut rng = substream(5, 0, 0);
    let n = 100_000;
    let (m, se) = mean_and_se(&JumpFamily::Gamma { gamma: 1.0 }.simulate_unnormalized(n, &mut rng).unwrap());
    assert!((m - 1.0).abs() < 4.0 * se);
    let (m, se) = mean_and_se(&JumpFamily::Uniform.simulate_unnormalized(n, &mut rng).unwrap());
    assert!((m - 0.5).abs() < 4.0 * se);
    let s = JumpFamily::SigmaStable { sigma: 0.5 }.simulate_unnormalized(n, &mut rng).unwrap();
    for &u in &[0.3f64, 1.0, 4.0] {
        let (m, se) = mean_and_se(&s.iter().map(|x| (-u * x).exp()).collect::<Vec<_>>());
        assert!((m - (-u.sqrt()).exp()).abs() < 4.0 * se, "u={u}");
    }
    let b = JumpFamily::Bessel { alpha: 1.0, beta: 1.5 };
    let xs = b.simulate_unnormalized(n, &mut rng).unwrap();
    let (m, se) = mean_and_se(&xs);
    assert!((m - b.kappa(1, 0.0)).abs() < 4.0 * se);
}

#[test]
fn parse_roundtrip() {
    for s in ["gamma:0.5", "uniform", "stable:0.3", "bessel:1,1.5", "gammamix:2,1,0.05"] {
        let f: JumpFamily = s.parse().unwrap();
        assert_eq!(f.to_string(), s);
    }
    assert!("gamma:-1".parse::<JumpFamily>().is_err());
    assert!("bessel:1,0.5".parse::<JumpFamily>().is_err());
    assert!("stable:1".parse::<JumpFamily>().is_err());
    assert!("nope".parse::<JumpFamily>().is_err());
}

#[test]
fn serde_roundtrip() {
    for f in families() {
        let js = serde_json::to_string(&f).unwrap();
        let back: JumpFamily = serde_json::from_str(&js).unwrap();
        assert_eq!(back, f);
    }
}
