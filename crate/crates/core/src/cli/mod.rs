//! Batch front end: run configuration, data files, and the `fit`, `eppf`,
//! `prior-k`, `simulate` and `diagnose` commands.

mod diagnose;
mod fit;
mod io;
mod simulate;
mod tables;

pub use diagnose::{cmd_diagnose, ColumnReport, DiagnoseReport};
pub use fit::{cmd_fit, fit, trace_csv, ChainSummary, FitOutput, LocusRelevance, ScalarSummary, Summary, IAC_CONVENTION};
pub use io::{fmt_f64, load_genotype_csv, load_scalar_csv, parse_genotype_csv, parse_scalar_csv, GenotypeData, GALAXY_CSV};
pub use simulate::{cmd_simulate, simulate_genotype, simulate_scalar, SimulateKind, SimulateParams, SimulatedData, Truth};
pub use tables::{cmd_eppf, cmd_prior_k, EppfRow, EppfTable};

use crate::counts::ComponentCountPrior;
use crate::jumps::JumpFamily;
use crate::kernels::GaussianNig;
use crate::partition::PartitionError;
use crate::samplers::{HyperPriors, SamplerConfig, SamplerError};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "NORM_IFPP_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::Config(_) | SamplerError::Kernel(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<PartitionError> for CliError {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::Invalid(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    #[default]
    Scalar,
    Genotype,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Scalar data default to the bundled Galaxy velocities (km/s × 10⁻³).
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub kind: DataKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Gaussian {
        m0: f64,
        kappa0: f64,
        nu0: f64,
        sigma0_sq: f64,
    },
    /// Symmetric Dirichlet prior on each locus' allele frequencies.
    Genotype {
        concentration: f64,
    },
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig::Gaussian { m0: 20.8315, kappa0: 0.01, nu0: 4.0, sigma0_sq: 4.0 }
    }
}

impl KernelConfig {
    pub fn gaussian(&self) -> Option<Result<GaussianNig, CliError>> {
        match *self {
            KernelConfig::Gaussian { m0, kappa0, nu0, sigma0_sq } => {
                Some(GaussianNig::new(m0, kappa0, nu0, sigma0_sq).map_err(|e| CliError::Config(e.to_string())))
            }
            KernelConfig::Genotype { .. } => None,
        }
    }
}

/// Evaluation points for the posterior density of scalar data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.from],
            p => (0..p).map(|i| self.from + (self.to - self.from) * i as f64 / (p - 1) as f64).collect(),
        }
    }

    /// The data range padded by a tenth on each side, 200 points.
    pub fn around(data: &[f64]) -> Self {
        let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = 0.1 * (hi - lo).max(1.0);
        GridSpec { from: lo - pad, to: hi + pad, points: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub grid: Option<GridSpec>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), grid: None }
    }
}

fn default_jumps() -> JumpFamily {
    JumpFamily::Gamma { gamma: 0.1 }
}

fn default_counts() -> ComponentCountPrior {
    ComponentCountPrior::ShiftedPoisson { lambda: 1.0 }
}

fn default_chains() -> usize {
    1
}

/// A complete `fit` run. Every block has a default, and the defaults fit the
/// Galaxy data with `Λ = 1` and `γ = 0.1` fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_jumps")]
    pub jumps: JumpFamily,
    #[serde(default = "default_counts")]
    pub counts: ComponentCountPrior,
    #[serde(default)]
    pub hyper: HyperPriors,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            chains: 1,
            data: DataConfig::default(),
            kernel: KernelConfig::default(),
            jumps: default_jumps(),
            counts: default_counts(),
            hyper: HyperPriors::default(),
            sampler: SamplerConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let c: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.chains == 0 {
            return Err(CliError::Config("chains must be at least 1".into()));
        }
        match (&self.kernel, self.data.kind) {
            (KernelConfig::Gaussian { .. }, DataKind::Scalar) => {
                self.kernel.gaussian().expect("gaussian kernel")?;
            }
            (KernelConfig::Genotype { concentration }, DataKind::Genotype) => {
                if !(*concentration > 0.0 && concentration.is_finite()) {
                    return Err(CliError::Config("genotype concentration must be positive".into()));
                }
                if self.data.path.is_none() {
                    return Err(CliError::Config("genotype data need data.path".into()));
                }
            }
            _ => return Err(CliError::Config("kernel kind does not match data kind".into())),
        }
        if let Some(g) = &self.output.grid {
            if !(g.from.is_finite() && g.to.is_finite() && g.from <= g.to) {
                return Err(CliError::Config("output.grid needs finite from <= to".into()));
            }
        }
        self.jumps.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.counts.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.hyper.validate(&self.jumps, &self.counts)?;
        self.sampler.validate()?;
        Ok(())
    }
}

/// Worker cap: `NORM_IFPP_THREADS` if set, otherwise the available cores.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
