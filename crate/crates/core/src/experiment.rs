//! Planted-model sweeps and end-to-end clustering of comparison files.
//!
//! Config files are flat `key = value` lines; `#` starts a comment. Keys:
//!
//! ```text
//! n = 200                  items
//! k = 4                    planted clusters (balanced sizes)
//! epsilon = 0.75           comparison reliability
//! delta = 0.5              separation of F_in over F_out
//! distribution = normal-normal
//! comparisons_power = 4    |T| = ⌈n (ln n)^a⌉
//! methods = adds3,adds4    any of adds3, adds4, mulk3, mulk4
//! k_mode = spur            spur | known
//! repetitions = 10
//! seed = 0                 repetition r uses seed + r
//! sweep = epsilon          comparisons | epsilon | delta | k | n | distributions
//! values = 0.25,0.5,0.75,1
//! output = results.csv
//! record_runtime = true    false writes runtime_ms = 0 (byte-reproducible output)
//! max_iters = 20000
//! tol = 1e-6
//! ```
//!
//! For `sweep = comparisons` the values are the exponents `a`.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::comparison::{ComparisonKind, QuadrupletRecord, TripletRecord};
use crate::error::{Error, Result};
use crate::eval::{evaluate, kmeans_rows, load_partition, save_partition, EvalReport, KMeansOptions};
use crate::io::read_stream;
use crate::model::{
    balanced_sizes, generate_partition, params_for_delta, sample_quadruplets, sample_similarities, sample_triplets,
    DistributionFamily, PlantedConfig, Sampling,
};
use crate::partition::Partition;
use crate::sdp::{solve_sdp_k, ClusteringMatrix, SolverOptions};
use crate::selection::{comparison_spur, SpurOptions, SpurResult};
use crate::similarity::{build_adds3, build_adds4, build_mulk3, build_mulk4, SimilarityKind, SimilarityMatrix};

/// Environment variable that overrides the worker count of [`run_experiment`].
pub const THREADS_ENV: &str = "COMPCLUST_THREADS";

pub const CSV_HEADER: &str = "sweep_param,sweep_value,seed,method,k_mode,k_true,k_est,ari,converged,runtime_ms";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KMode {
    /// Select k with comparison-based SPUR.
    Spur,
    /// Use the planted k.
    Known,
}

impl KMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Spur => "spur",
            Self::Known => "known",
        }
    }
}

impl FromStr for KMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spur" => Ok(Self::Spur),
            "known" => Ok(Self::Known),
            other => Err(Error::Config(format!("unknown k_mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    /// Exponents `a` of `|T| = ⌈n (ln n)^a⌉`.
    Comparisons(Vec<f64>),
    Epsilon(Vec<f64>),
    Delta(Vec<f64>),
    K(Vec<usize>),
    N(Vec<usize>),
    Distributions(Vec<DistributionFamily>),
}

impl Sweep {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Comparisons(_) => "comparisons",
            Self::Epsilon(_) => "epsilon",
            Self::Delta(_) => "delta",
            Self::K(_) => "k",
            Self::N(_) => "n",
            Self::Distributions(_) => "distributions",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Comparisons(v) | Self::Epsilon(v) | Self::Delta(v) => v.len(),
            Self::K(v) | Self::N(v) => v.len(),
            Self::Distributions(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn parse(name: &str, values: &str) -> Result<Self> {
        fn list<T: FromStr>(values: &str) -> Result<Vec<T>> {
            values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| v.parse().map_err(|_| Error::Config(format!("bad sweep value `{v}`"))))
                .collect()
        }
        Ok(match name {
            "comparisons" => Self::Comparisons(list(values)?),
            "epsilon" => Self::Epsilon(list(values)?),
            "delta" => Self::Delta(list(values)?),
            "k" => Self::K(list(values)?),
            "n" => Self::N(list(values)?),
            "distributions" => Self::Distributions(
                values
                    .split(',')
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .map(|v| {
                        DistributionFamily::from_name(v)
                            .ok_or_else(|| Error::Config(format!("unknown distribution `{v}`")))
                    })
                    .collect::<Result<_>>()?,
            ),
            other => return Err(Error::Config(format!("unknown sweep `{other}`"))),
        })
    }

    /// Applies point `idx` to a copy of `base` and returns it with its CSV label.
    fn point(&self, idx: usize, base: &Instance) -> (Instance, String) {
        let mut inst = base.clone();
        let label = match self {
            Self::Comparisons(v) => {
                inst.comparisons_power = v[idx];
                v[idx].to_string()
            }
            Self::Epsilon(v) => {
                inst.epsilon = v[idx];
                v[idx].to_string()
            }
            Self::Delta(v) => {
                inst.delta = v[idx];
                v[idx].to_string()
            }
            Self::K(v) => {
                inst.k = v[idx];
                v[idx].to_string()
            }
            Self::N(v) => {
                inst.n = v[idx];
                v[idx].to_string()
            }
            Self::Distributions(v) => {
                inst.family = v[idx];
                v[idx].name().to_string()
            }
        };
        (inst, label)
    }
}

/// Parameters of one planted instance, before seeding.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub family: DistributionFamily,
    pub comparisons_power: f64,
}

impl Default for Instance {
    fn default() -> Self {
        Self {
            n: 200,
            k: 4,
            epsilon: 0.75,
            delta: 0.5,
            family: DistributionFamily::NormalNormal { sigma: 0.1 },
            comparisons_power: 4.0,
        }
    }
}

impl Instance {
    /// `⌈n (ln n)^a⌉`
    pub fn comparison_count(&self) -> u64 {
        let n = self.n as f64;
        (n * n.ln().powf(self.comparisons_power)).ceil() as u64
    }

    pub fn planted_config(&self, seed: u64) -> Result<PlantedConfig> {
        if self.k == 0 || self.k > self.n {
            return Err(Error::Config(format!("need 1 <= k <= n, got k = {} with n = {}", self.k, self.n)));
        }
        let (f_in, f_out) = params_for_delta(self.family, self.delta)?;
        let config = PlantedConfig {
            n: self.n,
            cluster_sizes: balanced_sizes(self.n, self.k),
            f_in,
            f_out,
            epsilon: self.epsilon,
            sampling: Sampling::Count(self.comparison_count()),
            seed,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub base: Instance,
    pub sweep: Sweep,
    pub methods: Vec<SimilarityKind>,
    pub k_mode: KMode,
    pub repetitions: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub record_runtime: bool,
    pub solver: SolverOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            base: Instance::default(),
            sweep: Sweep::Comparisons(vec![4.0]),
            methods: vec![SimilarityKind::Adds3],
            k_mode: KMode::Spur,
            repetitions: 10,
            seed: 0,
            output: None,
            record_runtime: true,
            solver: SolverOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.sweep.is_empty() {
            return Err(Error::Config(format!("sweep `{}` has no values", self.sweep.name())));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods requested".into()));
        }
        if self.methods.contains(&SimilarityKind::External) {
            return Err(Error::Config("`external` is not a comparison-based method".into()));
        }
        self.solver.validate()?;
        for idx in 0..self.sweep.len() {
            self.sweep.point(idx, &self.base).0.planted_config(self.seed)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        let mut sweep_name = None;
        let mut sweep_values = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let bad = |what: &str| Error::Config(format!("line {}: bad {what} `{value}`", no + 1));
            match key {
                "n" => config.base.n = value.parse().map_err(|_| bad("n"))?,
                "k" => config.base.k = value.parse().map_err(|_| bad("k"))?,
                "epsilon" => config.base.epsilon = value.parse().map_err(|_| bad("epsilon"))?,
                "delta" => config.base.delta = value.parse().map_err(|_| bad("delta"))?,
                "distribution" => {
                    config.base.family = DistributionFamily::from_name(value).ok_or_else(|| bad("distribution"))?
                }
                "comparisons_power" => {
                    config.base.comparisons_power = value.parse().map_err(|_| bad("comparisons_power"))?
                }
                "methods" => {
                    config.methods = value
                        .split(',')
                        .map(str::trim)
                        .filter(|m| !m.is_empty())
                        .map(|m| m.parse().map_err(|_| bad("method")))
                        .collect::<Result<_>>()?
                }
                "k_mode" => config.k_mode = value.parse()?,
                "repetitions" => config.repetitions = value.parse().map_err(|_| bad("repetitions"))?,
                "seed" => config.seed = value.parse().map_err(|_| bad("seed"))?,
                "sweep" => sweep_name = Some(value.to_string()),
                "values" => sweep_values = Some(value.to_string()),
                "output" => config.output = Some(PathBuf::from(value)),
                "record_runtime" => config.record_runtime = value.parse().map_err(|_| bad("record_runtime"))?,
                "max_iters" => config.solver.max_iters = value.parse().map_err(|_| bad("max_iters"))?,
                "tol" => {
                    let tol: f64 = value.parse().map_err(|_| bad("tol"))?;
                    config.solver.tol_res = tol;
                    config.solver.tol_feas = tol;
                }
                other => return Err(Error::Config(format!("line {}: unknown key `{other}`", no + 1))),
            }
        }
        match (sweep_name, sweep_values) {
            (Some(name), Some(values)) => config.sweep = Sweep::parse(&name, &values)?,
            (None, None) => config.sweep = Sweep::Comparisons(vec![config.base.comparisons_power]),
            (Some(_), None) => return Err(Error::Config("`sweep` given without `values`".into())),
            (None, Some(_)) => return Err(Error::Config("`values` given without `sweep`".into())),
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub sweep_param: String,
    pub sweep_value: String,
    pub seed: u64,
    pub method: SimilarityKind,
    pub k_mode: KMode,
    pub k_true: usize,
    pub k_est: usize,
    pub ari: f64,
    pub converged: bool,
    pub runtime_ms: u64,
    /// Sweep point index, for ordering.
    pub point: usize,
}

impl ExperimentRow {
    fn sort_key(&self) -> (usize, u64, usize) {
        (self.point, self.seed, method_rank(self.method))
    }
}

fn method_rank(kind: SimilarityKind) -> usize {
    match kind {
        SimilarityKind::Adds3 => 0,
        SimilarityKind::Adds4 => 1,
        SimilarityKind::Mulk3 => 2,
        SimilarityKind::Mulk4 => 3,
        SimilarityKind::External => 4,
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[ExperimentRow]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER.split(',')).map_err(csv_error)?;
    for r in rows {
        writer
            .write_record([
                r.sweep_param.clone(),
                r.sweep_value.clone(),
                r.seed.to_string(),
                r.method.to_string(),
                r.k_mode.as_str().to_string(),
                r.k_true.to_string(),
                r.k_est.to_string(),
                r.ari.to_string(),
                r.converged.to_string(),
                r.runtime_ms.to_string(),
            ])
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numerical(format!("csv: {other:?}")),
    }
}

/// Median of the `ari` column, `None` without rows.
pub fn median_ari(rows: &[ExperimentRow]) -> Option<f64> {
    let mut values: Vec<f64> = rows.iter().map(|r| r.ari).collect();
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[mid] } else { 0.5 * (values[mid - 1] + values[mid]) })
}

/// Runs every (sweep point, repetition) pair, all methods sharing one sampled
/// instance, and returns rows sorted by point, seed, then method. Writes the
/// CSV when the config names an output file.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    config.validate()?;
    let jobs: Vec<(usize, u64)> = (0..config.sweep.len())
        .flat_map(|p| (0..config.repetitions as u64).map(move |r| (p, r)))
        .collect();
    let run_all = || jobs.par_iter().map(|&(p, r)| run_point(config, p, config.seed + r)).collect::<Vec<_>>();
    let results = match thread_override()? {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run_all),
        None => run_all(),
    };
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by_key(ExperimentRow::sort_key);
    if let Some(path) = &config.output {
        write_rows(File::create(path)?, &rows)?;
    }
    Ok(rows)
}

fn thread_override() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

fn run_point(config: &ExperimentConfig, point: usize, seed: u64) -> Result<Vec<ExperimentRow>> {
    let (inst, label) = config.sweep.point(point, &config.base);
    let planted = inst.planted_config(seed)?;
    let truth = generate_partition(planted.n, &planted.cluster_sizes, seed)?;
    let latent = sample_similarities(&truth, &planted.f_in, &planted.f_out, seed)?;
    let needs = |kind: ComparisonKind| config.methods.iter().any(|m| comparison_kind(*m) == Some(kind));
    let triplets = if needs(ComparisonKind::Triplet) {
        sample_triplets(&latent, planted.sampling, planted.epsilon, seed)?
    } else {
        Vec::new()
    };
    let quadruplets = if needs(ComparisonKind::Quadruplet) {
        sample_quadruplets(&latent, planted.sampling, planted.epsilon, seed)?
    } else {
        Vec::new()
    };

    let mut rows = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let start = Instant::now();
        let (s, count) = match comparison_kind(method) {
            Some(ComparisonKind::Triplet) => (build_similarity(method, &triplets, &[], inst.n)?, triplets.len()),
            _ => (build_similarity(method, &[], &quadruplets, inst.n)?, quadruplets.len()),
        };
        let known = (config.k_mode == KMode::Known).then_some(inst.k);
        let spur = SpurOptions { solver: config.solver.clone(), ..Default::default() };
        let outcome = cluster_similarity(&s, count as u64, known, &spur, seed)?;
        let ari = evaluate(&outcome.partition, &truth)?.ari;
        let elapsed = start.elapsed().as_millis() as u64;
        rows.push(ExperimentRow {
            sweep_param: config.sweep.name().to_string(),
            sweep_value: label.clone(),
            seed,
            method,
            k_mode: config.k_mode,
            k_true: inst.k,
            k_est: outcome.k,
            ari,
            converged: outcome.x.converged,
            runtime_ms: if config.record_runtime { elapsed } else { 0 },
            point,
        });
    }
    Ok(rows)
}

/// Which records a similarity is built from.
pub fn comparison_kind(method: SimilarityKind) -> Option<ComparisonKind> {
    match method {
        SimilarityKind::Adds3 | SimilarityKind::Mulk3 => Some(ComparisonKind::Triplet),
        SimilarityKind::Adds4 | SimilarityKind::Mulk4 => Some(ComparisonKind::Quadruplet),
        SimilarityKind::External => None,
    }
}

fn build_similarity(
    method: SimilarityKind,
    triplets: &[TripletRecord],
    quadruplets: &[QuadrupletRecord],
    n: usize,
) -> Result<SimilarityMatrix> {
    match method {
        SimilarityKind::Adds3 => build_adds3(triplets.iter().copied(), n),
        SimilarityKind::Mulk3 => build_mulk3(triplets.iter().copied(), n),
        SimilarityKind::Adds4 => build_adds4(quadruplets.iter().copied(), n),
        SimilarityKind::Mulk4 => build_mulk4(quadruplets.iter().copied(), n),
        SimilarityKind::External => Err(Error::KindMismatch("`external` is not built from comparisons".into())),
    }
}

/// Reads a comparison file and builds `method` from it. Also returns the
/// number of records read.
pub fn similarity_from_file(path: impl AsRef<Path>, method: SimilarityKind) -> Result<(SimilarityMatrix, u64)> {
    let (header, reader) = read_stream(path)?;
    let want = comparison_kind(method)
        .ok_or_else(|| Error::KindMismatch("`external` is not built from comparisons".into()))?;
    if header.kind != want {
        return Err(Error::KindMismatch(format!("method {method} needs {want} comparisons, file holds {}", header.kind)));
    }
    let n = header.n;
    let (s, count) = match want {
        ComparisonKind::Triplet => {
            let records = reader.triplets()?.collect::<Result<Vec<_>>>()?;
            (build_similarity(method, &records, &[], n)?, records.len())
        }
        ComparisonKind::Quadruplet => {
            let records = reader.quadruplets()?.collect::<Result<Vec<_>>>()?;
            (build_similarity(method, &[], &records, n)?, records.len())
        }
    };
    Ok((s, count as u64))
}

#[derive(Clone, Debug)]
pub struct ClusterOutcome {
    pub partition: Partition,
    /// Number of clusters asked of k-means (given or selected).
    pub k: usize,
    pub x: ClusteringMatrix,
    /// Present when k was selected by SPUR.
    pub spur: Option<SpurResult>,
}

/// SDP-k for a known `k`, comparison-based SPUR otherwise, then k-means on
/// the rows of the solution.
pub fn cluster_similarity(
    s: &SimilarityMatrix,
    comparisons: u64,
    k: Option<usize>,
    opts: &SpurOptions,
    seed: u64,
) -> Result<ClusterOutcome> {
    let n = s.n();
    let (x, k, spur) = match k {
        Some(k) => {
            if k == 0 || k > n {
                return Err(Error::InvalidParameter(format!("need 1 <= k <= n = {n}, got {k}")));
            }
            let mut x = solve_sdp_k(s.values(), k, &opts.solver)?;
            x.log.clear();
            (x, k, None)
        }
        None => {
            let result = comparison_spur(s.values(), comparisons, opts)?;
            (result.x.clone(), result.k_hat, Some(result))
        }
    };
    let partition = kmeans_rows(&x.values, k, &KMeansOptions { seed, ..Default::default() })?;
    Ok(ClusterOutcome { partition, k, x, spur })
}

#[derive(Clone, Debug, Default)]
pub struct ClusterFileOptions {
    pub k: Option<usize>,
    pub spur: SpurOptions,
    pub seed: u64,
    /// Truth partition to score against.
    pub labels: Option<PathBuf>,
}

/// Comparisons file → similarity → partition file; scored when labels are given.
pub fn cluster_file(
    comparisons: impl AsRef<Path>,
    method: SimilarityKind,
    output: impl AsRef<Path>,
    opts: &ClusterFileOptions,
) -> Result<(ClusterOutcome, Option<EvalReport>)> {
    let (s, count) = similarity_from_file(comparisons, method)?;
    let outcome = cluster_similarity(&s, count, opts.k, &opts.spur, opts.seed)?;
    save_partition(output, &outcome.partition)?;
    let report = match &opts.labels {
        Some(path) => Some(evaluate(&outcome.partition, &load_partition(path)?)?),
        None => None,
    };
    Ok((outcome, report))
}
