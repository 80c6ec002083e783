use super::{KernelError, ObservationModel};
use crate::mathkit::ln_gamma;
use crate::random::{categorical_ln, ln_dirichlet};
use rand::Rng;
use std::ops::Range;

/// Diploid multilocus genotypes. An observation stores allele counts for all
/// loci back to back; each locus block sums to 2, or to 0 when missing.
/// Per-locus allele frequencies get independent Dirichlet priors.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeModel {
    offsets: Vec<usize>,
    concentration: Vec<f64>,
}

/// Log allele frequencies, laid out like an observation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeAtom {
    pub ln_freq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeStats {
    pub n: usize,
    counts: Vec<u32>,
}

impl GenotypeModel {
    /// `alleles[l]` is `J_l`; the Dirichlet concentration is `conc` everywhere.
    pub fn new(alleles: &[usize], conc: f64) -> Result<Self, KernelError> {
        let conc: Vec<Vec<f64>> = alleles.iter().map(|&j| vec![conc; j]).collect();
        Self::with_concentration(conc)
    }

    pub fn with_concentration(conc: Vec<Vec<f64>>) -> Result<Self, KernelError> {
        if conc.is_empty() {
            return Err(KernelError::InvalidParameter("at least one locus required".into()));
        }
        let mut offsets = vec![0];
        for (l, c) in conc.iter().enumerate() {
            if c.len() < 2 {
                return Err(KernelError::InvalidParameter(format!("locus {} needs at least 2 alleles", l + 1)));
            }
            if let Some(bad) = c.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
                return Err(KernelError::InvalidParameter(format!(
                    "Dirichlet concentration must be positive, got {bad} at locus {}",
                    l + 1
                )));
            }
            offsets.push(offsets[l] + c.len());
        }
        Ok(GenotypeModel { offsets, concentration: conc.concat() })
    }

    pub fn loci(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn alleles(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn width(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn locus(&self, l: usize) -> Range<usize> {
        self.offsets[l]..self.offsets[l + 1]
    }

    fn observed(y: &[u8]) -> bool {
        y.iter().any(|&c| c > 0)
    }
}

/// `ln(2! / Π y_j!)` for a locus block summing to 2.
fn ln_multinomial2(y: &[u8]) -> f64 {
    if y.contains(&1) {
        std::f64::consts::LN_2
    } else {
        0.0
    }
}

impl ObservationModel for GenotypeModel {
    type Obs = Vec<u8>;
    type Atom = GenotypeAtom;
    type Stats = GenotypeStats;

    fn validate_obs(&self, y: &Vec<u8>) -> Result<(), KernelError> {
        if y.len() != self.width() {
            return Err(KernelError::InvalidObservation(format!("expected {} allele counts, got {}", self.width(), y.len())));
        }
        for l in 0..self.loci() {
            let s: u32 = y[self.locus(l)].iter().map(|&c| c as u32).sum();
            if s != 0 && s != 2 {
                return Err(KernelError::InvalidObservation(format!("locus {} allele counts sum to {s}", l + 1)));
            }
        }
        Ok(())
    }

    fn empty_stats(&self) -> GenotypeStats {
        GenotypeStats { n: 0, counts: vec![0; self.width()] }
    }

    fn add_obs(&self, s: &mut GenotypeStats, y: &Vec<u8>) {
        s.n += 1;
        for (c, &v) in s.counts.iter_mut().zip(y) {
            *c += v as u32;
        }
    }

    fn remove_obs(&self, s: &mut GenotypeStats, y: &Vec<u8>) {
        s.n -= 1;
        for (c, &v) in s.counts.iter_mut().zip(y) {
            *c -= v as u32;
        }
    }

    fn log_likelihood(&self, y: &Vec<u8>, atom: &GenotypeAtom) -> f64 {
        let mut total = 0.0;
        for l in 0..self.loci() {
            let r = self.locus(l);
            let yl = &y[r.clone()];
            if !Self::observed(yl) {
                continue;
            }
            total += ln_multinomial2(yl);
            for (&c, &lf) in yl.iter().zip(&atom.ln_freq[r]) {
                if c > 0 {
                    total += c as f64 * lf;
                }
            }
        }
        total
    }

    fn sample_prior_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> GenotypeAtom {
        let mut ln_freq = Vec::with_capacity(self.width());
        for l in 0..self.loci() {
            ln_freq.extend(ln_dirichlet(&self.concentration[self.locus(l)], rng));
        }
        GenotypeAtom { ln_freq }
    }

    fn sample_posterior_atom<R: Rng + ?Sized>(&self, s: &GenotypeStats, rng: &mut R) -> GenotypeAtom {
        let mut ln_freq = Vec::with_capacity(self.width());
        let mut alpha = Vec::new();
        for l in 0..self.loci() {
            let r = self.locus(l);
            alpha.clear();
            alpha.extend(self.concentration[r.clone()].iter().zip(&s.counts[r]).map(|(&a, &c)| a + c as f64));
            ln_freq.extend(ln_dirichlet(&alpha, rng));
        }
        GenotypeAtom { ln_freq }
    }

    /// Product over observed loci of the Dirichlet-multinomial pmf with 2 draws.
    fn log_predictive_stats(&self, y: &Vec<u8>, s: &GenotypeStats) -> f64 {
        let mut total = 0.0;
        for l in 0..self.loci() {
            let r = self.locus(l);
            let yl = &y[r.clone()];
            if !Self::observed(yl) {
                continue;
            }
            let mut a_sum = 0.0;
            let mut num = 0.0;
            for ((&a, &c), &v) in self.concentration[r.clone()].iter().zip(&s.counts[r]).zip(yl) {
                let a = a + c as f64;
                a_sum += a;
                if v > 0 {
                    num += ln_gamma(a + v as f64) - ln_gamma(a);
                }
            }
            total += ln_multinomial2(yl) + num - (a_sum * (a_sum + 1.0)).ln();
        }
        total
    }

    fn sample_obs<R: Rng + ?Sized>(&self, atom: &GenotypeAtom, rng: &mut R) -> Vec<u8> {
        let mut y = vec![0u8; self.width()];
        for l in 0..self.loci() {
            let r = self.locus(l);
            for _ in 0..2 {
                let j = categorical_ln(&atom.ln_freq[r.clone()], rng);
                y[r.start + j] += 1;
            }
        }
        y
    }
}
