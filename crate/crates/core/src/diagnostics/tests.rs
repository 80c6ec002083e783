use super::*;
use crate::random::{std_normal, substream};
use proptest::prelude::*;

fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, 0, 0);
    let mut x = Vec::with_capacity(n);
    let mut v = std_normal(&mut rng) / (1.0 - phi * phi).sqrt();
    for _ in 0..n {
        x.push(v);
        v = phi * v + std_normal(&mut rng);
    }
    x
}

#[test]
fn iac_iid_and_ar1() {
    let iid = ar1(0.0, 100_000, 1);
    let a = iac(&iid);
    assert!(a.value > 0.9 && a.value < 1.1, "{a:?}");
    assert!(!a.degenerate);
    let x = ar1(0.5, 100_000, 2);
    let a = iac(&x);
    assert!((a.value - 3.0).abs() < 0.3, "{a:?}");
    let e = ess(&x);
    assert!((e - 100_000.0 / 3.0).abs() < 0.1 * 100_000.0 / 3.0);
    assert!((e * a.value - 100_000.0).abs() < 1e-6);
}

#[test]
fn iac_degenerate_and_clipped() {
    let c = vec![4.0; 500];
    let a = iac(&c);
    assert_eq!(a.value, 1.0);
    assert!(a.degenerate);
    assert_eq!(ess(&c), 500.0);
    // alternating sequence has negative lag-one correlation; ESS stays at G
    let alt: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    assert_eq!(iac(&alt).value, 1.0);
    assert_eq!(ess(&alt), 1000.0);
}

#[test]
fn lpml_examples() {
    let lp = vec![vec![-1.3, 0.2], vec![-1.3, 0.2], vec![-1.3, 0.2]];
    let cpo = log_cpo(&lp);
    assert!((cpo[0] + 1.3).abs() < 1e-14 && (cpo[1] - 0.2).abs() < 1e-14);
    let lp = vec![vec![0.0], vec![-2.0]];
    let expect = (2.0 / (1.0 + 2f64.exp())).ln();
    assert!((lpml(&lp) - expect).abs() < 1e-14);
}

#[test]
fn lpml_log_space_matches_direct() {
    let mut rng = substream(3, 0, 0);
    let lp: Vec<Vec<f64>> = (0..50).map(|_| (0..7).map(|_| -2.0 + 0.5 * std_normal(&mut rng)).collect()).collect();
    let direct: f64 = (0..7)
        .map(|i| {
            let h = lp.iter().map(|r| (-r[i]).exp()).sum::<f64>() / 50.0;
            -(h.ln())
        })
        .sum();
    assert!((lpml(&lp) - direct).abs() < 1e-10);
    let mut lower = lp.clone();
    for row in &mut lower {
        row[3] -= 0.7;
    }
    assert!(lpml(&lower) < lpml(&lp));
}

#[test]
fn similarity_examples() {
    let alloc = vec![vec![0, 0, 1], vec![0, 1, 1], vec![0, 0, 0], vec![0, 1, 0]];
    let s = posterior_similarity(&alloc);
    for (i, row) in s.iter().enumerate() {
        assert_eq!(row[i], 1.0);
    }
    assert_eq!(s[0][1], 0.5);
    assert_eq!(s[1][2], 0.5);
    assert_eq!(s[0][2], 0.5);
    assert_eq!(s[2][0], s[0][2]);
    let one = posterior_similarity(&vec![vec![0; 5]; 10]);
    assert!(one.iter().flatten().all(|&v| v == 1.0));
}

fn locus_model() -> GenotypeModel {
    GenotypeModel::new(&[2], 1.0).unwrap()
}

#[test]
fn kl_relevance_examples() {
    let m = locus_model();
    let a = [0.9f64.ln(), 0.1f64.ln()];
    let b = [0.1f64.ln(), 0.9f64.ln()];
    assert!(kl_relevance_draw(&m, &[&a], &[0, 0, 0, 0], 0).abs() < 1e-15);
    let n = 10;
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let d = kl_relevance_draw(&m, &[&a, &b], &labels, 0);
    let kl = 0.9 * (0.9f64 / 0.5).ln() + 0.1 * (0.1f64 / 0.5).ln();
    assert!((d - 2.0 * n as f64 * kl).abs() < 1e-12);
    assert!((kl - 0.368).abs() < 1e-3);
    // a cluster with no members does not contribute
    let c = [0.5f64.ln(), 0.5f64.ln()];
    assert!((kl_relevance_draw(&m, &[&a, &b, &c], &labels, 0) - d).abs() < 1e-12);
}

#[test]
fn kl_projection_minimizer_matches_grid_search() {
    // n = 2 individuals, 2 alleles: minimize Σ_i 2·KL(θ_i ‖ t) over t on a fine grid
    let m = locus_model();
    for &(p, q) in &[(0.9, 0.2), (0.3, 0.35), (0.05, 0.7)] {
        let a = [f64::ln(p), f64::ln(1.0 - p)];
        let b = [f64::ln(q), f64::ln(1.0 - q)];
        let kl = |x: f64, t: f64| x * (x / t).ln() + (1.0 - x) * ((1.0 - x) / (1.0 - t)).ln();
        let best = (1..100_000)
            .map(|i| {
                let t = i as f64 / 100_000.0;
                2.0 * (kl(p, t) + kl(q, t))
            })
            .fold(f64::INFINITY, f64::min);
        let d = kl_relevance_draw(&m, &[&a, &b], &[0, 1], 0);
        assert!((d - best).abs() < 1e-7, "{d} vs {best}");
    }
}

#[test]
fn ari_examples() {
    assert_eq!(adjusted_rand_index(&[0, 0, 1, 1, 2, 2], &[5, 5, 3, 3, 0, 0]), 1.0);
    assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]) < 0.0);
    assert_eq!(adjusted_rand_index(&[0, 0, 0], &[0, 0, 0]), 1.0);
}

#[test]
fn count_summary() {
    let s = summarize_counts(&[2, 3, 3, 4]);
    assert_eq!(s.mode, 3);
    assert_eq!(s.pmf, vec![0.0, 0.0, 0.25, 0.5, 0.25]);
    assert!((s.mean - 3.0).abs() < 1e-15);
    assert!((s.var - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn bands_and_quantiles() {
    let v: Vec<f64> = (0..=100).map(|i| i as f64).collect();
    assert_eq!(quantile(&v, 0.025), 2.5);
    assert_eq!(quantile(&v, 0.5), 50.0);
    let rows: Vec<Vec<f64>> = v.iter().map(|&x| vec![x, 1.0]).collect();
    let b = density_bands(&rows);
    assert_eq!(b[0], (50.0, 2.5, 97.5));
    assert_eq!(b[1], (1.0, 1.0, 1.0));
}

#[test]
fn trace_store_check() {
    let mut t = TraceStore::default();
    assert!(t.check().is_ok());
    t.iteration.push(1);
    t.k.push(2);
    t.m.push(3);
    t.m_na.push(1);
    t.u.push(1.0);
    t.gamma.push(1.0);
    t.lambda.push(1.0);
    t.loglik.push(0.0);
    t.log_pred.push(vec![0.0; 3]);
    t.alloc.push(vec![0, 1, 1]);
    assert!(t.check().is_ok());
    t.alloc[0] = vec![0, 0, 0];
    assert!(t.check().is_err());
}

#[test]
fn test_statistics() {
    let mut rng = substream(5, 0, 0);
    let a: Vec<f64> = (0..2000).map(|_| std_normal(&mut rng)).collect();
    let b: Vec<f64> = (0..3000).map(|_| std_normal(&mut rng)).collect();
    let shifted: Vec<f64> = b.iter().map(|v| v + 0.3).collect();
    assert!(ks_two_sample(&a, &b) > 0.01);
    assert!(ks_two_sample(&a, &shifted) < 1e-6);
    let cdf = |x: f64| 0.5 * (1.0 + statrs::function::erf::erf(x / 2f64.sqrt()));
    assert!(ks_one_sample(&a, cdf) > 0.01);
    assert!(ks_one_sample(&shifted, cdf) < 1e-6);
    assert!(chi_square_gof(&[250, 250, 500], &[0.25, 0.25, 0.5]) > 0.99);
    assert!(chi_square_gof(&[400, 100, 500], &[0.25, 0.25, 0.5]) < 1e-6);
    assert!(chi_square_gof(&[1, 1], &[1.0]) == 0.0);
    assert!(chi_square_two_sample(&[100, 200, 1], &[200, 400, 3]) > 0.5);
    assert!(chi_square_two_sample(&[100, 200], &[200, 100]) < 1e-6);
    // χ²₁ at 3.841 has p ≈ 0.05
    assert!((chi_square_gof(&[60, 40], &[0.5, 0.5]) - 0.0455).abs() < 1e-3);
}

proptest! {
    #[test]
    fn kl_relevance_nonnegative_and_symmetric(
        raw in proptest::collection::vec(0.01f64..1.0, 9),
        labels in proptest::collection::vec(0usize..3, 1..20),
    ) {
        let m = GenotypeModel::new(&[3], 1.0).unwrap();
        let clusters: Vec<Vec<f64>> = raw
            .chunks(3)
            .map(|c| {
                let s: f64 = c.iter().sum();
                c.iter().map(|v| (v / s).ln()).collect()
            })
            .collect();
        let refs: Vec<&[f64]> = clusters.iter().map(|c| c.as_slice()).collect();
        let d = kl_relevance_draw(&m, &refs, &labels, 0);
        prop_assert!(d >= 0.0);
        let swapped: Vec<Vec<f64>> = clusters.iter().map(|c| vec![c[2], c[0], c[1]]).collect();
        let refs2: Vec<&[f64]> = swapped.iter().map(|c| c.as_slice()).collect();
        prop_assert!((kl_relevance_draw(&m, &refs2, &labels, 0) - d).abs() < 1e-12 * (1.0 + d));
        let same: Vec<&[f64]> = vec![refs[0]; 3];
        prop_assert!(kl_relevance_draw(&m, &same, &labels, 0).abs() < 1e-12);
    }

    #[test]
    fn ess_times_iac_is_length(x in proptest::collection::vec(-5.0f64..5.0, 2..300)) {
        let a = iac(&x);
        prop_assert!(a.value >= 1.0);
        prop_assert!((ess(&x) * a.value - x.len() as f64).abs() < 1e-9);
    }
}
