//! `compclust`: planted comparison data, similarities, clustering and sweeps.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use compclust::comparison::ComparisonKind;
use compclust::eval::{load_partition, save_partition};
use compclust::experiment::{
    cluster_file, median_ari, run_experiment, similarity_from_file, ClusterFileOptions, ExperimentConfig, Instance,
};
use compclust::io::{write_stream, ComparisonHeader};
use compclust::model::{
    generate_partition, quadruplet_universe, sample_quadruplets, sample_similarities, sample_triplets,
    triplet_universe, DistributionFamily, Sampling,
};
use compclust::sdp::{adds3_ideal_sigma, adds4_ideal_sigma, block_mean_sigma, certificate, IdealModel, SolverOptions};
use compclust::selection::{LambdaMinRule, Screening, SpurOptions};
use compclust::similarity::{SimilarityKind, SimilarityMatrix};

#[derive(Parser)]
#[command(name = "compclust", version, about = "Clustering from triplet and quadruplet comparisons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Adds3,
    Adds4,
    Mulk3,
    Mulk4,
}

impl From<Method> for SimilarityKind {
    fn from(m: Method) -> Self {
        match m {
            Method::Adds3 => Self::Adds3,
            Method::Adds4 => Self::Adds4,
            Method::Mulk3 => Self::Mulk3,
            Method::Mulk4 => Self::Mulk4,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Triplet,
    Quadruplet,
}

#[derive(Clone, Copy, ValueEnum)]
enum LambdaMin {
    /// √(c ln n / n)
    LnN,
    /// √(c ln c / n)
    LnC,
}

#[derive(clap::Args)]
struct SolverArgs {
    /// Residual stopping tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    /// Fixed ADMM penalty (disables adaptive rescaling).
    #[arg(long)]
    rho: Option<f64>,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol_res: self.tol,
            tol_feas: self.tol,
            max_iters: self.max_iters,
            rho: self.rho,
            adaptive_rho: self.rho.is_none(),
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a planted instance: comparison file plus truth partition.
    Generate {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 0.75)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// normal-normal, beta-uniform or normal-uniform
        #[arg(long, default_value = "normal-normal")]
        distribution: String,
        /// Exponent a in |T| = ⌈n (ln n)^a⌉.
        #[arg(long, default_value_t = 4.0, conflicts_with = "count")]
        power: f64,
        /// Exact number of comparisons.
        #[arg(long)]
        count: Option<u64>,
        #[arg(long, value_enum, default_value = "triplet")]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comparison file to write.
        #[arg(long)]
        out: PathBuf,
        /// Truth partition file to write.
        #[arg(long)]
        truth: PathBuf,
    },
    /// Build a similarity matrix from a comparison file.
    Similarity {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster a comparison file; k is selected with SPUR unless given.
    Cluster {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "adds3")]
        method: Method,
        #[arg(long)]
        k: Option<usize>,
        /// Truth partition; prints the ARI when given.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Partition file to write.
        #[arg(long)]
        out: PathBuf,
        /// Write the SPUR candidate table (CSV) here.
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "ln-n")]
        lambda_min: LambdaMin,
        /// Tolerance of the first pass over SPUR candidates; 0 solves every one at --tol.
        #[arg(long, default_value_t = 1e-4)]
        screen_tol: f64,
        /// Candidates within this of the best first-pass objective are solved again at --tol.
        #[arg(long, default_value_t = 0.05)]
        screen_margin: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run a planted sweep described by a key=value config file.
    Experiment {
        config: PathBuf,
        /// Overrides the config's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recovery-certificate quantities of a similarity matrix against a truth partition.
    Certify {
        /// Similarity dump (as written by `similarity`).
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Use the planted expectation of this method for Σ instead of block means of the matrix.
        #[arg(long, value_enum, requires_all = ["epsilon", "delta", "comparisons"])]
        planted: Option<Method>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Number of comparisons the matrix was built from.
        #[arg(long)]
        comparisons: Option<u64>,
        /// Also report whether this λ lies inside the interval.
        #[arg(long)]
        lambda: Option<f64>,
        /// CSV output (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { n, k, epsilon, delta, distribution, power, count, kind, seed, out, truth } => {
            let family = DistributionFamily::from_name(&distribution)
                .with_context(|| format!("unknown distribution `{distribution}`"))?;
            let instance = Instance { n, k, epsilon, delta, family, comparisons_power: power };
            let mut config = instance.planted_config(seed)?;
            if let Some(m) = count {
                config.sampling = Sampling::Count(m);
            }
            let partition = generate_partition(n, &config.cluster_sizes, seed)?;
            let latent = sample_similarities(&partition, &config.f_in, &config.f_out, seed)?;
            let written = match kind {
                Kind::Triplet => {
                    let records = sample_triplets(&latent, config.sampling, epsilon, seed)?;
                    write_stream(&out, &ComparisonHeader::new(ComparisonKind::Triplet, n), records.iter().copied())?;
                    (records.len() as u64, triplet_universe(n))
                }
                Kind::Quadruplet => {
                    let records = sample_quadruplets(&latent, config.sampling, epsilon, seed)?;
                    write_stream(&out, &ComparisonHeader::new(ComparisonKind::Quadruplet, n), records.iter().copied())?;
                    (records.len() as u64, quadruplet_universe(n))
                }
            };
            save_partition(&truth, &partition)?;
            println!("wrote {} of {} comparisons to {}", written.0, written.1, out.display());
        }
        Command::Similarity { input, method, out } => {
            let (s, count) = similarity_from_file(&input, method.into())?;
            s.save(&out)?;
            println!("{} from {count} comparisons, n = {}", s.kind(), s.n());
        }
        Command::Cluster { input, method, k, labels, out, candidates, lambda_min, screen_tol, screen_margin, seed, solver } => {
            let lambda_min_rule = match lambda_min {
                LambdaMin::LnN => LambdaMinRule::LnN,
                LambdaMin::LnC => LambdaMinRule::LnC,
            };
            let opts = ClusterFileOptions {
                k,
                spur: SpurOptions {
                    solver: solver.options(),
                    lambda_min_rule,
                    screening: (screen_tol > 0.0).then_some(Screening { tol: screen_tol, margin: screen_margin }),
                },
                seed,
                labels,
            };
            let (outcome, report) = cluster_file(&input, method.into(), &out, &opts)?;
            println!(
                "k={} converged={} iterations={} primal_res={:e} dual_res={:e}",
                outcome.k, outcome.x.converged, outcome.x.iterations, outcome.x.primal_res, outcome.x.dual_res
            );
            if let (Some(path), Some(spur)) = (candidates, &outcome.spur) {
                spur.write_candidates(BufWriter::new(File::create(&path)?))?;
            }
            if let Some(report) = report {
                print!("{}", report.to_text());
            }
        }
        Command::Experiment { config, output } => {
            let mut config = ExperimentConfig::load(&config)?;
            if output.is_some() {
                config.output = output;
            }
            let rows = run_experiment(&config)?;
            if config.output.is_none() {
                compclust::experiment::write_rows(io::stdout().lock(), &rows)?;
            }
            let mut groups: Vec<(String, SimilarityKind)> = Vec::new();
            for r in &rows {
                if !groups.contains(&(r.sweep_value.clone(), r.method)) {
                    groups.push((r.sweep_value.clone(), r.method));
                }
            }
            for (value, method) in groups {
                let subset: Vec<_> =
                    rows.iter().filter(|r| r.sweep_value == value && r.method == method).cloned().collect();
                if let Some(median) = median_ari(&subset) {
                    eprintln!("{}={value} {method}: median ari {median:.4} over {} runs", config.sweep.name(), subset.len());
                }
            }
        }
        Command::Certify { matrix, truth, planted, epsilon, delta, comparisons, lambda, out } => {
            let s = SimilarityMatrix::load(&matrix)?;
            let partition = load_partition(&truth)?;
            if partition.n() != s.n() {
                bail!("matrix has n = {} but the partition has n = {}", s.n(), partition.n());
            }
            let sigma = match planted {
                None => block_mean_sigma(s.values(), &partition)?,
                Some(method) => {
                    let (eps, del, m) = (epsilon.unwrap_or(0.0), delta.unwrap_or(0.0), comparisons.unwrap_or(0));
                    let n = s.n();
                    match method {
                        Method::Adds3 => adds3_ideal_sigma(
                            m as f64 / triplet_universe(n) as f64,
                            eps,
                            del,
                            partition.cluster_sizes(),
                        )?,
                        Method::Adds4 => adds4_ideal_sigma(
                            m as f64 / quadruplet_universe(n) as f64,
                            eps,
                            del,
                            partition.cluster_sizes(),
                        )?,
                        Method::Mulk3 | Method::Mulk4 => bail!("planted expectations exist for adds3 and adds4 only"),
                    }
                }
            };
            let model = IdealModel::new(partition, sigma)?;
            let report = certificate(s.values(), &model)?;
            let mut sink: Box<dyn Write> = match out {
                Some(path) => Box::new(BufWriter::new(File::create(path)?)),
                None => Box::new(io::stdout().lock()),
            };
            let mut header = "delta1,delta2,spectral_gap,lambda_lo,lambda_hi,nonempty".to_string();
            let mut row = format!(
                "{},{},{},{},{},{}",
                report.delta1, report.delta2, report.spectral_gap, report.lambda_lo, report.lambda_hi, report.nonempty
            );
            if let Some(l) = lambda {
                header.push_str(",lambda,contains");
                row.push_str(&format!(",{l},{}", report.contains(l)));
            }
            writeln!(sink, "{header}\n{row}")?;
            sink.flush()?;
        }
    }
    Ok(())
}
