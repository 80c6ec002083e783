use super::io::{fmt_f64, load_genotype_csv, load_scalar_csv, parse_scalar_csv, GALAXY_CSV};
use super::{worker_threads, CliError, DataKind, GridSpec, KernelConfig, RunConfig};
use crate::diagnostics::{density_bands, ess, iac, log_cpo, lpml, mean_var, quantile, summarize_counts, CountSummary, Iac, TraceStore};
use crate::kernels::{GenotypeModel, ObservationModel};
use crate::samplers::{run_chains, MixtureState, Observer};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSummary {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub chain: usize,
    pub retained: usize,
    pub k_mean: Option<f64>,
    pub m_mean: Option<f64>,
    pub k_iac: Iac,
    pub k_ess: f64,
    pub m_iac: Iac,
    pub m_ess: f64,
    pub acceptance_u: Option<f64>,
    pub acceptance_gamma: Option<f64>,
    pub acceptance_lambda: Option<f64>,
}

/// Posterior KL relevance of one locus (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusRelevance {
    pub locus: usize,
    pub name: String,
    pub median: f64,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub chains: usize,
    /// Retained draws over all chains.
    pub retained: usize,
    pub seed: u64,
    pub k: Option<CountSummary>,
    pub m: Option<CountSummary>,
    pub m_na_mean: Option<f64>,
    pub u_mean: Option<f64>,
    pub gamma: Option<ScalarSummary>,
    pub lambda: Option<ScalarSummary>,
    pub lpml: Option<f64>,
    pub per_chain: Vec<ChainSummary>,
    pub relevance: Vec<LocusRelevance>,
    pub iac_convention: String,
    pub wall_seconds: f64,
    pub config: RunConfig,
}

/// Chain output plus what is needed to write it.
#[derive(Debug, Clone)]
pub struct FitOutput {
    pub traces: Vec<TraceStore>,
    pub grid: Vec<f64>,
    pub loci: Vec<String>,
    pub summary: Summary,
}

pub const IAC_CONVENTION: &str = "1 + 2 sum_t rho_t over an adaptive window (first W with W >= 5 IAC), clipped below at 1";

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn pooled<T: Clone>(traces: &[TraceStore], f: impl Fn(&TraceStore) -> &Vec<T>) -> Vec<T> {
    traces.iter().flat_map(|t| f(t).iter().cloned()).collect()
}

fn scalar_summary(x: &[f64]) -> Option<ScalarSummary> {
    let (mean, var) = mean_var(x);
    finite(mean).map(|mean| ScalarSummary { mean, sd: var.sqrt() })
}

/// Runs all chains of `config` and summarizes them; writes nothing.
pub fn fit(config: &RunConfig) -> Result<FitOutput, CliError> {
    config.validate()?;
    let threads = worker_threads();
    let start = Instant::now();
    let (traces, grid, loci, n) = match config.data.kind {
        DataKind::Scalar => {
            let data = match &config.data.path {
                Some(p) => load_scalar_csv(p)?,
                None => parse_scalar_csv(GALAXY_CSV).map_err(CliError::Config)?,
            };
            let model = config.kernel.gaussian().expect("scalar data use the Gaussian kernel")?;
            let grid = config.output.grid.unwrap_or_else(|| GridSpec::around(&data)).points();
            let traces = collect(run_chains(
                &data,
                &model,
                &config.jumps,
                &config.counts,
                &config.hyper,
                &config.sampler,
                config.chains,
                threads,
                &grid,
                None,
            ))?;
            (traces, grid, Vec::new(), data.len())
        }
        DataKind::Genotype => {
            let path = config.data.path.as_ref().ok_or_else(|| CliError::Config("genotype data need data.path".into()))?;
            let g = load_genotype_csv(path)?;
            let KernelConfig::Genotype { concentration } = config.kernel else {
                return Err(CliError::Config("genotype data use the genotype kernel".into()));
            };
            let model = GenotypeModel::new(&g.alleles, concentration).map_err(|e| CliError::Config(e.to_string()))?;
            let relevance = |s: &MixtureState<<GenotypeModel as ObservationModel>::Atom>| {
                let refs: Vec<&[f64]> = s.atoms[..s.k()].iter().map(|a| a.ln_freq.as_slice()).collect();
                (0..model.loci()).map(|l| crate::diagnostics::kl_relevance_draw(&model, &refs, &s.labels, l)).collect()
            };
            let observer: Observer<'_, _> = &relevance;
            let traces = collect(run_chains(
                &g.rows,
                &model,
                &config.jumps,
                &config.counts,
                &config.hyper,
                &config.sampler,
                config.chains,
                threads,
                &[],
                Some(observer),
            ))?;
            (traces, Vec::new(), g.loci, g.rows.len())
        }
    };
    let summary = summarize(config, &traces, &loci, n, start.elapsed().as_secs_f64());
    Ok(FitOutput { traces, grid, loci, summary })
}

fn collect(results: Vec<Result<TraceStore, crate::samplers::SamplerError>>) -> Result<Vec<TraceStore>, CliError> {
    results
        .into_iter()
        .enumerate()
        .map(|(c, r)| {
            r.map_err(CliError::from).map_err(|e| match e {
                CliError::Numerical(m) => CliError::Numerical(format!("chain {}: {m}", c + 1)),
                other => other,
            })
        })
        .collect()
}

fn summarize(config: &RunConfig, traces: &[TraceStore], loci: &[String], n: usize, wall_seconds: f64) -> Summary {
    let k = pooled(traces, |t| &t.k);
    let m = pooled(traces, |t| &t.m);
    let m_na: Vec<f64> = pooled(traces, |t| &t.m_na).into_iter().map(|v| v as f64).collect();
    let u = pooled(traces, |t| &t.u);
    let log_pred = pooled(traces, |t| &t.log_pred);
    let retained = k.len();
    let per_chain = traces
        .iter()
        .enumerate()
        .map(|(c, t)| {
            let (kf, mf) = (t.k_f64(), t.m_f64());
            ChainSummary {
                chain: c + 1,
                retained: t.len(),
                k_mean: finite(mean_var(&kf).0),
                m_mean: finite(mean_var(&mf).0),
                k_iac: iac(&kf),
                k_ess: ess(&kf),
                m_iac: iac(&mf),
                m_ess: ess(&mf),
                acceptance_u: finite(t.acceptance.u),
                acceptance_gamma: finite(t.acceptance.gamma),
                acceptance_lambda: finite(t.acceptance.lambda),
            }
        })
        .collect();
    let relevance = if retained == 0 {
        Vec::new()
    } else {
        let rows = pooled(traces, |t| &t.relevance);
        loci.iter()
            .enumerate()
            .map(|(l, name)| {
                let mut col: Vec<f64> = rows.iter().map(|r| r[l]).collect();
                col.sort_by(f64::total_cmp);
                LocusRelevance {
                    locus: l + 1,
                    name: name.clone(),
                    median: quantile(&col, 0.5),
                    mean: col.iter().sum::<f64>() / col.len() as f64,
                    lower: quantile(&col, 0.025),
                    upper: quantile(&col, 0.975),
                }
            })
            .collect()
    };
    let nonempty = retained > 0;
    Summary {
        n,
        chains: traces.len(),
        retained,
        seed: config.sampler.seed,
        k: nonempty.then(|| summarize_counts(&k)),
        m: nonempty.then(|| summarize_counts(&m)),
        m_na_mean: finite(mean_var(&m_na).0),
        u_mean: finite(mean_var(&u).0),
        gamma: config.hyper.gamma_prior.and_then(|_| scalar_summary(&pooled(traces, |t| &t.gamma))),
        lambda: config.hyper.lambda_prior.and_then(|_| scalar_summary(&pooled(traces, |t| &t.lambda))),
        lpml: nonempty.then(|| lpml(&log_pred)),
        per_chain,
        relevance,
        iac_convention: IAC_CONVENTION.into(),
        wall_seconds,
        config: config.clone(),
    }
}

fn rows_csv<T>(
    header: &str,
    width: usize,
    traces: &[TraceStore],
    rows: impl Fn(&TraceStore) -> &Vec<Vec<T>>,
    cell: impl Fn(&T) -> String,
) -> String {
    let mut s = String::from(header);
    for j in 1..=width {
        let _ = write!(s, ",{j}");
    }
    s.push('\n');
    for (c, t) in traces.iter().enumerate() {
        for (it, row) in t.iteration.iter().zip(rows(t)) {
            let _ = write!(s, "{},{it}", c + 1);
            for v in row {
                s.push(',');
                s.push_str(&cell(v));
            }
            s.push('\n');
        }
    }
    s
}

/// `trace.csv` contents: one row per retained iteration and chain.
pub fn trace_csv(traces: &[TraceStore]) -> String {
    let mut s = String::from("chain,iter,k,M,M_na,u,gamma,lambda,loglik\n");
    for (c, t) in traces.iter().enumerate() {
        for i in 0..t.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                c + 1,
                t.iteration[i],
                t.k[i],
                t.m[i],
                t.m_na[i],
                fmt_f64(t.u[i]),
                fmt_f64(t.gamma[i]),
                fmt_f64(t.lambda[i]),
                fmt_f64(t.loglik[i])
            );
        }
    }
    s
}

/// Runs [`fit`] and writes `trace.csv`, `alloc.csv`, `logpred.csv`,
/// `cpo.csv`, `summary.json`, plus `density_grid.csv` for scalar data or
/// `relevance.csv` for genotypes, into `config.output.dir`.
pub fn cmd_fit(config: &RunConfig) -> Result<FitOutput, CliError> {
    let out = fit(config)?;
    let dir = &config.output.dir;
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let traces = &out.traces;
    fs::write(dir.join("trace.csv"), trace_csv(traces)).map_err(io)?;
    fs::write(dir.join("alloc.csv"), rows_csv("chain,iter", out.summary.n, traces, |t| &t.alloc, |v| (v + 1).to_string())).map_err(io)?;
    fs::write(dir.join("logpred.csv"), rows_csv("chain,iter", out.summary.n, traces, |t| &t.log_pred, |v| fmt_f64(*v))).map_err(io)?;

    let log_pred = pooled(traces, |t| &t.log_pred);
    let mut cpo = String::from("datum,log_cpo\n");
    if !log_pred.is_empty() {
        for (i, v) in log_cpo(&log_pred).iter().enumerate() {
            let _ = writeln!(cpo, "{},{}", i + 1, fmt_f64(*v));
        }
    }
    fs::write(dir.join("cpo.csv"), cpo).map_err(io)?;

    if config.data.kind == DataKind::Scalar {
        let mut s = String::from("x,mean,lower,upper\n");
        let density = pooled(traces, |t| &t.density);
        if !density.is_empty() {
            for (x, (m, lo, hi)) in out.grid.iter().zip(density_bands(&density)) {
                let _ = writeln!(s, "{},{},{},{}", fmt_f64(*x), fmt_f64(m), fmt_f64(lo), fmt_f64(hi));
            }
        }
        fs::write(dir.join("density_grid.csv"), s).map_err(io)?;
    } else {
        let s = rows_csv("chain,iter", out.loci.len(), traces, |t| &t.relevance, |v| fmt_f64(*v));
        fs::write(dir.join("relevance.csv"), s).map_err(io)?;
    }
    let json = serde_json::to_string_pretty(&out.summary).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(dir.join("summary.json"), json).map_err(io)?;
    Ok(out)
}
