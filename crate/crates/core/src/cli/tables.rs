use super::io::fmt_f64;
use super::CliError;
use crate::counts::ComponentCountPrior;
use crate::jumps::JumpFamily;
use crate::mathkit::{log_sum_exp, QuadratureSpec};
use crate::partition::{integer_partitions, log_eppf, log_eppf_fdmm, log_prior_k_table, set_partition_multiplicity, EppfQuery};
use std::fmt;

/// Largest `n` for which the full table over integer partitions is printed.
pub const MAX_TABLE_N: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct EppfRow {
    pub sizes: Vec<usize>,
    /// Number of set partitions with these block sizes.
    pub multiplicity: f64,
    pub log_eppf: f64,
    /// Finite Dirichlet closed form, for Gamma jumps.
    pub log_eppf_fdmm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EppfTable {
    pub rows: Vec<EppfRow>,
    /// `Σ multiplicity · π` over the full table.
    pub total: Option<f64>,
}

impl fmt::Display for EppfTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fdmm = self.rows.iter().any(|r| r.log_eppf_fdmm.is_some());
        write!(f, "sizes,multiplicity,log_eppf")?;
        if fdmm {
            write!(f, ",log_eppf_fdmm")?;
        }
        writeln!(f)?;
        for r in &self.rows {
            let sizes: Vec<String> = r.sizes.iter().map(|s| s.to_string()).collect();
            write!(f, "{},{},{}", sizes.join("+"), r.multiplicity, fmt_f64(r.log_eppf))?;
            if let Some(v) = r.log_eppf_fdmm {
                write!(f, ",{}", fmt_f64(v))?;
            }
            writeln!(f)?;
        }
        if let Some(t) = self.total {
            writeln!(f, "total,,{}", fmt_f64(t))?;
        }
        Ok(())
    }
}

/// Log-eppf of one partition, or of every integer partition of `n` when
/// `sizes` is absent.
pub fn cmd_eppf(
    n: usize,
    sizes: Option<&[usize]>,
    family: &JumpFamily,
    prior: &ComponentCountPrior,
    quad: &QuadratureSpec,
) -> Result<EppfTable, CliError> {
    family.validate().map_err(|e| CliError::Config(e.to_string()))?;
    prior.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let list = match sizes {
        Some(s) => {
            if s.iter().sum::<usize>() != n {
                return Err(CliError::Config(format!("block sizes {s:?} do not sum to n = {n}")));
            }
            vec![s.to_vec()]
        }
        None => {
            if n == 0 || n > MAX_TABLE_N {
                return Err(CliError::Config(format!("full tables need 1 <= n <= {MAX_TABLE_N}")));
            }
            integer_partitions(n)
        }
    };
    let mut rows = Vec::with_capacity(list.len());
    for s in list {
        let q = EppfQuery { sizes: &s, family, prior, quad };
        let log_eppf = log_eppf(&q)?;
        let log_eppf_fdmm = match family {
            JumpFamily::Gamma { gamma } => Some(log_eppf_fdmm(&s, *gamma, prior, quad)?),
            _ => None,
        };
        rows.push(EppfRow { multiplicity: set_partition_multiplicity(&s), sizes: s, log_eppf, log_eppf_fdmm });
    }
    let total = sizes.is_none().then(|| {
        let terms: Vec<f64> = rows.iter().map(|r| r.multiplicity.ln() + r.log_eppf).collect();
        log_sum_exp(&terms).exp()
    });
    Ok(EppfTable { rows, total })
}

/// `Pr(K_n = k)` for `k = 1..=n`.
pub fn cmd_prior_k(n: usize, family: &JumpFamily, prior: &ComponentCountPrior, quad: &QuadratureSpec) -> Result<Vec<f64>, CliError> {
    family.validate().map_err(|e| CliError::Config(e.to_string()))?;
    prior.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(log_prior_k_table(n, family, prior, quad)?.into_iter().map(f64::exp).collect())
}
