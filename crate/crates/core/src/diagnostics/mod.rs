//! Chain output analysis: autocorrelation times, LPML, co-clustering and
//! locus relevance.

use crate::kernels::GenotypeModel;
use crate::mathkit::log_sum_exp;
use serde::{Deserialize, Serialize};

/// Window constant of the adaptive IAC truncation.
pub const SOKAL_C: f64 = 5.0;

/// Everything recorded at retained iterations of one chain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceStore {
    pub iteration: Vec<usize>,
    pub k: Vec<usize>,
    pub m: Vec<usize>,
    pub m_na: Vec<usize>,
    pub u: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub loglik: Vec<f64>,
    /// `ln f(y_i | θ_i)` per iteration and datum.
    pub log_pred: Vec<Vec<f64>>,
    pub alloc: Vec<Vec<usize>>,
    /// Mixture density at the grid points, per iteration.
    pub density: Vec<Vec<f64>>,
    /// Per iteration and locus, for genotype data.
    pub relevance: Vec<Vec<f64>>,
    /// Post-burn-in Metropolis acceptance rates; NaN when nothing was proposed.
    pub acceptance: Acceptance,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub u: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl TraceStore {
    pub fn len(&self) -> usize {
        self.iteration.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iteration.is_empty()
    }

    pub fn k_f64(&self) -> Vec<f64> {
        self.k.iter().map(|&v| v as f64).collect()
    }

    pub fn m_f64(&self) -> Vec<f64> {
        self.m.iter().map(|&v| v as f64).collect()
    }

    /// All scalar traces share one length and per-iteration vectors are
    /// consistent.
    pub fn check(&self) -> Result<(), String> {
        let g = self.len();
        let lens = [self.k.len(), self.m.len(), self.m_na.len(), self.u.len(), self.gamma.len(), self.lambda.len(), self.loglik.len()];
        if lens.iter().any(|&l| l != g) {
            return Err(format!("scalar traces have unequal lengths {lens:?} vs {g}"));
        }
        for (name, v) in [("log_pred", self.log_pred.len()), ("alloc", self.alloc.len())] {
            if v != g {
                return Err(format!("{name} has {v} rows, expected {g}"));
            }
        }
        for (t, labels) in self.alloc.iter().enumerate() {
            let k = self.k[t];
            let mut seen = vec![false; k];
            for &l in labels {
                if l >= k {
                    return Err(format!("iteration {}: label {l} not below k = {k}", self.iteration[t]));
                }
                seen[l] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(format!("iteration {}: empty allocated component", self.iteration[t]));
            }
            if self.m_na[t] + k != self.m[t] {
                return Err(format!("iteration {}: k + M_na != M", self.iteration[t]));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Iac {
    pub value: f64,
    /// Last lag included in the sum.
    pub window: usize,
    /// The trace has zero variance.
    pub degenerate: bool,
}

/// Integrated autocorrelation time `1 + 2 Σ_{t=1}^{W} ρ̂_t`, with `W` the first
/// lag at which `W ≥ c · τ̂(W)`, and clipped below at 1.
pub fn iac(x: &[f64]) -> Iac {
    let n = x.len();
    if n < 2 {
        return Iac { value: 1.0, window: 0, degenerate: true };
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0 = d.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(c0 > 0.0) || x.iter().all(|&v| v == x[0]) {
        return Iac { value: 1.0, window: 0, degenerate: true };
    }
    let mut tau = 1.0;
    let mut window = 0;
    for t in 1..n {
        let ct = d[..n - t].iter().zip(&d[t..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        tau += 2.0 * ct / c0;
        window = t;
        if t as f64 >= SOKAL_C * tau {
            break;
        }
    }
    Iac { value: tau.max(1.0), window, degenerate: false }
}

/// `G / IAC`, so never above `G`.
pub fn ess(x: &[f64]) -> f64 {
    x.len() as f64 / iac(x).value
}

/// `ln CPO_i = -ln( (1/G) Σ_g e^{-ℓ_ig} )` from the iteration-major matrix of
/// `ℓ_ig = ln f(y_i | θ_i^(g))`.
pub fn log_cpo(log_pred: &[Vec<f64>]) -> Vec<f64> {
    let g = log_pred.len();
    if g == 0 {
        return Vec::new();
    }
    let n = log_pred[0].len();
    let mut buf = vec![0.0; g];
    (0..n)
        .map(|i| {
            for (b, row) in buf.iter_mut().zip(log_pred) {
                *b = -row[i];
            }
            (g as f64).ln() - log_sum_exp(&buf)
        })
        .collect()
}

pub fn lpml(log_pred: &[Vec<f64>]) -> f64 {
    log_cpo(log_pred).iter().sum()
}

/// Fraction of iterations in which items `i` and `j` share a label.
pub fn posterior_similarity(alloc: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let n = alloc.first().map_or(0, |a| a.len());
    let mut s = vec![vec![0.0; n]; n];
    for labels in alloc {
        for i in 0..n {
            for j in i..n {
                if labels[i] == labels[j] {
                    s[i][j] += 1.0;
                }
            }
        }
    }
    let g = alloc.len().max(1) as f64;
    for i in 0..n {
        for j in i..n {
            s[i][j] /= g;
            s[j][i] = s[i][j];
        }
    }
    s
}

/// KL distance at locus `l` between the per-individual model and its best
/// common-frequency restriction, for one draw. `ln_freq[c]` are the log
/// frequencies of cluster `c` and `labels[i]` is individual `i`'s cluster.
///
/// The projection is the average frequency vector `θ̃ = (1/n) Σ_i θ_i`, and the
/// distance is `2 Σ_i KL(θ_i ‖ θ̃)` for two allele draws per individual.
pub fn kl_relevance_draw(model: &GenotypeModel, ln_freq: &[&[f64]], labels: &[usize], l: usize) -> f64 {
    let r = model.locus(l);
    let j = r.len();
    let n = labels.len();
    let mut counts = vec![0usize; ln_freq.len()];
    for &c in labels {
        counts[c] += 1;
    }
    let mut mean = vec![0.0; j];
    for (c, lf) in ln_freq.iter().enumerate() {
        for (m, &v) in mean.iter_mut().zip(&lf[r.clone()]) {
            *m += counts[c] as f64 * v.exp();
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut d = 0.0;
    for (c, lf) in ln_freq.iter().enumerate() {
        if counts[c] == 0 {
            continue;
        }
        let mut kl = 0.0;
        for (&v, &m) in lf[r.clone()].iter().zip(&mean) {
            let p = v.exp();
            if p > 0.0 {
                kl += p * (v - m.ln());
            }
        }
        d += counts[c] as f64 * kl.max(0.0);
    }
    2.0 * d
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |v: usize| (v * v.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&v| c2(v)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(n);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountSummary {
    pub mean: f64,
    pub sd: f64,
    pub var: f64,
    pub mode: usize,
    /// `pmf[j]` is the posterior probability of the value `j`.
    pub pmf: Vec<f64>,
    pub iac: Iac,
    pub ess: f64,
}

pub fn summarize_counts(x: &[usize]) -> CountSummary {
    let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let (mean, var) = mean_var(&xf);
    let top = x.iter().copied().max().unwrap_or(0);
    let mut pmf = vec![0.0; top + 1];
    for &v in x {
        pmf[v] += 1.0;
    }
    let g = x.len().max(1) as f64;
    pmf.iter_mut().for_each(|p| *p /= g);
    let mode = pmf.iter().enumerate().fold(0, |best, (i, &p)| if p > pmf[best] { i } else { best });
    let iac = iac(&xf);
    CountSummary { mean, sd: var.sqrt(), var, mode, pmf, iac, ess: xf.len() as f64 / iac.value }
}

/// Mean and sample variance; `(NaN, NaN)` for empty input.
pub fn mean_var(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pointwise mean and 2.5% / 97.5% bands of the per-iteration density rows.
pub fn density_bands(density: &[Vec<f64>]) -> Vec<(f64, f64, f64)> {
    let p = density.first().map_or(0, |d| d.len());
    let mut col = Vec::with_capacity(density.len());
    (0..p)
        .map(|j| {
            col.clear();
            col.extend(density.iter().map(|row| row[j]));
            col.sort_by(f64::total_cmp);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            (mean, quantile(&col, 0.025), quantile(&col, 0.975))
        })
        .collect()
}

/// Goodness-of-fit p-value of observed `counts` against cell probabilities
/// `probs`. Cells with expected count below 5 are pooled from the tail inward.
pub fn chi_square_gof(counts: &[usize], probs: &[f64]) -> f64 {
    let total: usize = counts.iter().sum();
    let cells: Vec<(f64, f64)> =
        probs.iter().enumerate().map(|(i, &p)| (counts.get(i).copied().unwrap_or(0) as f64, p * total as f64)).collect();
    let extra: usize = counts.iter().skip(probs.len()).sum();
    if extra > 0 {
        return 0.0;
    }
    let pooled = pool_cells(cells, |&(_, e)| e);
    if pooled.len() < 2 {
        return 1.0;
    }
    let stat: f64 = pooled.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    chi_square_sf(stat, (pooled.len() - 1) as f64)
}

/// Two-sample homogeneity p-value for two count vectors over the same cells.
pub fn chi_square_two_sample(a: &[usize], b: &[usize]) -> f64 {
    let len = a.len().max(b.len());
    let na: f64 = a.iter().sum::<usize>() as f64;
    let nb: f64 = b.iter().sum::<usize>() as f64;
    let cells: Vec<(f64, f64)> = (0..len).map(|i| (a.get(i).copied().unwrap_or(0) as f64, b.get(i).copied().unwrap_or(0) as f64)).collect();
    let min_expected = |(x, y): &(f64, f64)| (x + y) * na.min(nb) / (na + nb);
    let pooled = pool_cells(cells, min_expected);
    if pooled.len() < 2 {
        return 1.0;
    }
    let n = na + nb;
    let stat: f64 = pooled
        .iter()
        .map(|&(x, y)| {
            let ea = (x + y) * na / n;
            let eb = (x + y) * nb / n;
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    chi_square_sf(stat, (pooled.len() - 1) as f64)
}

fn pool_cells<F: Fn(&(f64, f64)) -> f64>(cells: Vec<(f64, f64)>, expected: F) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for c in cells {
        acc = (acc.0 + c.0, acc.1 + c.1);
        if expected(&acc) >= 5.0 {
            out.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc != (0.0, 0.0) {
        match out.last_mut() {
            Some(last) => *last = (last.0 + acc.0, last.1 + acc.1),
            None => out.push(acc),
        }
    }
    out
}

fn chi_square_sf(stat: f64, df: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(df).expect("positive degrees of freedom").sf(stat)
}

/// Asymptotic p-value of the two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    kolmogorov_sf((ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d)
}

/// Asymptotic p-value of the one-sample Kolmogorov–Smirnov statistic.
pub fn ks_one_sample<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> f64 {
    let mut x = x.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x.iter().enumerate().fold(0.0f64, |d, (i, &v)| {
        let f = cdf(v);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    });
    kolmogorov_sf((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d)
}

/// `P(K > t)` for the Kolmogorov distribution.
fn kolmogorov_sf(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests;
