use clap::{Parser, Subcommand, ValueEnum};
use norm_ifpp::cli::{
    cmd_diagnose, cmd_eppf, cmd_fit, cmd_prior_k, cmd_simulate, fmt_f64, CliError, RunConfig, SimulateKind, SimulateParams,
};
use norm_ifpp::counts::ComponentCountPrior;
use norm_ifpp::jumps::JumpFamily;
use norm_ifpp::mathkit::QuadratureSpec;
use std::path::PathBuf;
use std::process::ExitCode;

/// Finite mixtures with normalized independent finite point process weights.
#[derive(Parser)]
#[command(name = "norm-ifpp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the posterior sampler and write traces and summaries.
    Fit {
        /// TOML run configuration; defaults fit the bundled Galaxy data.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Log-eppf of one partition, or of all partitions of n (n <= 10).
    Eppf {
        #[arg(long)]
        n: usize,
        /// Block sizes, e.g. 3,1,1.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// gamma:γ, uniform, stable:σ, bessel:α,β or gammamix:shape,rate,ε.
        #[arg(long)]
        family: JumpFamily,
        /// poisson:Λ, negbin:p,r or dirac:M.
        #[arg(long)]
        prior: ComponentCountPrior,
    },
    /// Prior probabilities of k clusters among n observations.
    PriorK {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        family: JumpFamily,
        #[arg(long)]
        prior: ComponentCountPrior,
    },
    /// Generate data with planted populations plus truth.json.
    Simulate {
        #[arg(long, value_enum, default_value = "genotype")]
        kind: Kind,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        populations: usize,
        #[arg(long, default_value_t = 30)]
        per_population: usize,
        /// Scalar: distance between neighbouring means in units of sd.
        #[arg(long, default_value_t = 6.0)]
        separation: f64,
        #[arg(long, default_value_t = 1.0)]
        sd: f64,
        #[arg(long, default_value_t = 6)]
        loci: usize,
        #[arg(long, default_value_t = 4)]
        min_alleles: usize,
        #[arg(long, default_value_t = 8)]
        max_alleles: usize,
        #[arg(long, default_value_t = 0.3)]
        concentration: f64,
        /// 1-based loci whose allele profile is shared by all populations.
        #[arg(long, value_delimiter = ',')]
        shared_loci: Vec<usize>,
    },
    /// IAC, ESS and LPML of a fit output directory.
    Diagnose { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Scalar,
    Genotype,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let quad = QuadratureSpec::default();
    match cli.command {
        Command::Fit { config, seed, chains, out } => {
            let mut cfg = match config {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig::default(),
            };
            if let Some(s) = seed {
                cfg.sampler.seed = s;
            }
            if let Some(c) = chains {
                cfg.chains = c;
            }
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            let fit = cmd_fit(&cfg)?;
            let s = &fit.summary;
            println!("n = {}, retained draws = {}, chains = {}", s.n, s.retained, s.chains);
            if let (Some(k), Some(m)) = (&s.k, &s.m) {
                println!("E(k | data) = {:.4}  sd {:.4}  mode {}", k.mean, k.sd, k.mode);
                println!("E(M | data) = {:.4}  sd {:.4}", m.mean, m.sd);
            }
            if let Some(l) = s.lpml {
                println!("LPML = {l:.4}");
            }
            println!("wrote {}", cfg.output.dir.display());
        }
        Command::Eppf { n, sizes, family, prior } => {
            print!("{}", cmd_eppf(n, sizes.as_deref(), &family, &prior, &quad)?);
        }
        Command::PriorK { n, family, prior } => {
            let p = cmd_prior_k(n, &family, &prior, &quad)?;
            println!("k,prob");
            for (k, v) in p.iter().enumerate() {
                println!("{},{}", k + 1, fmt_f64(*v));
            }
        }
        Command::Simulate {
            kind,
            seed,
            out,
            populations,
            per_population,
            separation,
            sd,
            loci,
            min_alleles,
            max_alleles,
            concentration,
            shared_loci,
        } => {
            if shared_loci.contains(&0) {
                return Err(CliError::Config("shared loci are 1-based".into()));
            }
            let params = SimulateParams {
                kind: match kind {
                    Kind::Scalar => SimulateKind::Scalar,
                    Kind::Genotype => SimulateKind::Genotype,
                },
                populations,
                per_population,
                seed,
                separation,
                sd,
                loci,
                min_alleles,
                max_alleles,
                concentration,
                shared_loci: shared_loci.iter().map(|l| l - 1).collect(),
            };
            let (_, truth) = cmd_simulate(&params, &out)?;
            println!("wrote {} observations to {}", truth.labels.len(), out.display());
        }
        Command::Diagnose { dir } => {
            let r = cmd_diagnose(&dir)?;
            println!("chain,column,draws,mean,iac,ess,degenerate");
            for c in &r.columns {
                let mean = c.mean.map_or("NaN".to_string(), fmt_f64);
                println!("{},{},{},{},{},{},{}", c.chain, c.column, c.draws, mean, fmt_f64(c.iac.value), fmt_f64(c.ess), c.iac.degenerate);
            }
            if let Some(l) = r.lpml {
                println!("lpml,{}", fmt_f64(l));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
