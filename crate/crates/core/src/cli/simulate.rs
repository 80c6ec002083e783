use super::io::{fmt_f64, GenotypeData};
use super::CliError;
use crate::random::{categorical_ln, ln_dirichlet, std_normal, stream, substream};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulateKind {
    Scalar,
    Genotype,
}

/// Planted-population generator settings. Scalar data are Gaussian with
/// means `0, separation·sd, 2·separation·sd, …`; genotype populations draw
/// per-locus allele profiles from a symmetric Dirichlet, except at
/// `shared_loci` where every population uses one common profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateParams {
    pub kind: SimulateKind,
    pub populations: usize,
    pub per_population: usize,
    pub seed: u64,
    pub separation: f64,
    pub sd: f64,
    pub loci: usize,
    pub min_alleles: usize,
    pub max_alleles: usize,
    pub concentration: f64,
    /// 0-based.
    pub shared_loci: Vec<usize>,
}

impl Default for SimulateParams {
    fn default() -> Self {
        SimulateParams {
            kind: SimulateKind::Genotype,
            populations: 3,
            per_population: 30,
            seed: 1,
            separation: 6.0,
            sd: 1.0,
            loci: 6,
            min_alleles: 4,
            max_alleles: 8,
            concentration: 0.3,
            shared_loci: Vec::new(),
        }
    }
}

impl SimulateParams {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if self.populations == 0 || self.per_population == 0 {
            return bad("populations and per_population must be positive");
        }
        match self.kind {
            SimulateKind::Scalar if !(self.sd > 0.0 && self.separation.is_finite()) => bad("sd must be positive"),
            SimulateKind::Genotype if self.loci == 0 => bad("loci must be positive"),
            SimulateKind::Genotype if self.min_alleles < 2 || self.max_alleles < self.min_alleles => {
                bad("need 2 <= min_alleles <= max_alleles")
            }
            SimulateKind::Genotype if !(self.concentration > 0.0) => bad("concentration must be positive"),
            SimulateKind::Genotype if self.shared_loci.iter().any(|&l| l >= self.loci) => bad("shared locus out of range"),
            _ => Ok(()),
        }
    }
}

/// Ground truth written next to simulated data. Labels are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub kind: SimulateKind,
    pub labels: Vec<usize>,
    /// Scalar: component means.
    pub means: Vec<f64>,
    pub sd: f64,
    /// Genotype: `profiles[population][locus][allele]`.
    pub profiles: Vec<Vec<Vec<f64>>>,
    pub shared_loci: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimulatedData {
    Scalar(Vec<f64>),
    Genotype(GenotypeData),
}

fn planted_labels(p: &SimulateParams) -> Vec<usize> {
    (0..p.populations).flat_map(|c| std::iter::repeat_n(c + 1, p.per_population)).collect()
}

pub fn simulate_scalar(p: &SimulateParams) -> Result<(Vec<f64>, Truth), CliError> {
    p.validate()?;
    let mut rng = substream(p.seed, 0, stream::SIMULATE);
    let means: Vec<f64> = (0..p.populations).map(|c| c as f64 * p.separation * p.sd).collect();
    let labels = planted_labels(p);
    let y = labels.iter().map(|&c| means[c - 1] + p.sd * std_normal(&mut rng)).collect();
    let truth = Truth { kind: SimulateKind::Scalar, labels, means, sd: p.sd, profiles: Vec::new(), shared_loci: Vec::new() };
    Ok((y, truth))
}

pub fn simulate_genotype(p: &SimulateParams) -> Result<(GenotypeData, Truth), CliError> {
    p.validate()?;
    let mut rng = substream(p.seed, 0, stream::SIMULATE);
    let alleles: Vec<usize> = (0..p.loci).map(|_| rng.random_range(p.min_alleles..=p.max_alleles)).collect();
    let mut ln_profiles = vec![Vec::with_capacity(p.loci); p.populations];
    for (l, &j) in alleles.iter().enumerate() {
        let alpha = vec![p.concentration; j];
        if p.shared_loci.contains(&l) {
            let common = ln_dirichlet(&alpha, &mut rng);
            ln_profiles.iter_mut().for_each(|pop| pop.push(common.clone()));
        } else {
            ln_profiles.iter_mut().for_each(|pop| pop.push(ln_dirichlet(&alpha, &mut rng)));
        }
    }
    let labels = planted_labels(p);
    let rows = labels
        .iter()
        .map(|&c| {
            let mut row = Vec::with_capacity(alleles.iter().sum());
            for (lf, &j) in ln_profiles[c - 1].iter().zip(&alleles) {
                let mut block = vec![0u8; j];
                block[categorical_ln(lf, &mut rng)] += 1;
                block[categorical_ln(lf, &mut rng)] += 1;
                row.extend(block);
            }
            row
        })
        .collect();
    let loci = (1..=p.loci).map(|l| format!("L{l}")).collect();
    let profiles = ln_profiles.iter().map(|pop| pop.iter().map(|lf| lf.iter().map(|v| v.exp()).collect()).collect()).collect();
    let truth = Truth { kind: SimulateKind::Genotype, labels, means: Vec::new(), sd: 0.0, profiles, shared_loci: p.shared_loci.clone() };
    Ok((GenotypeData { loci, alleles, rows }, truth))
}

/// Writes `data.csv` and `truth.json` into `out`.
pub fn cmd_simulate(p: &SimulateParams, out: &Path) -> Result<(SimulatedData, Truth), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", out.display()));
    fs::create_dir_all(out).map_err(io)?;
    let (data, truth, csv) = match p.kind {
        SimulateKind::Scalar => {
            let (y, t) = simulate_scalar(p)?;
            let mut csv = String::from("y\n");
            for v in &y {
                csv.push_str(&fmt_f64(*v));
                csv.push('\n');
            }
            (SimulatedData::Scalar(y), t, csv)
        }
        SimulateKind::Genotype => {
            let (g, t) = simulate_genotype(p)?;
            let csv = g.to_csv();
            (SimulatedData::Genotype(g), t, csv)
        }
    };
    fs::write(out.join("data.csv"), csv).map_err(io)?;
    let json = serde_json::to_string_pretty(&truth).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(out.join("truth.json"), json).map_err(io)?;
    Ok((data, truth))
}
