//! Partition extraction from clustering matrices and the adjusted Rand index.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::rng::rng;
use crate::sdp::linalg::eigh;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Seeding {
    /// Distance-weighted (k-means++) seeding.
    #[default]
    Weighted,
    /// `k` distinct rows drawn uniformly.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub seeding: Seeding,
    pub seed: u64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self { restarts: 10, max_iters: 300, seeding: Seeding::Weighted, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansRun {
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub history: Vec<f64>,
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    (0..points.ncols()).map(|d| (points[(i, d)] - centers[(c, d)]).powi(2)).sum()
}

fn seed_centers(points: &DMatrix<f64>, k: usize, seeding: Seeding, rng: &mut crate::rng::Rng) -> DMatrix<f64> {
    let n = points.nrows();
    let mut chosen = Vec::with_capacity(k);
    match seeding {
        Seeding::Uniform => chosen = rand::seq::index::sample(rng, n, k).into_vec(),
        Seeding::Weighted => {
            chosen.push(rng.random_range(0..n));
            let mut best: Vec<f64> = (0..n).map(|i| sq_dist(points, i, points, chosen[0])).collect();
            while chosen.len() < k {
                let total: f64 = best.iter().sum();
                let next = if total > 0.0 {
                    let mut target = rng.random::<f64>() * total;
                    let mut pick = n - 1;
                    for (i, &d) in best.iter().enumerate() {
                        if d > 0.0 && target < d {
                            pick = i;
                            break;
                        }
                        target -= d;
                    }
                    pick
                } else {
                    // all remaining rows coincide with a center
                    rng.random_range(0..n)
                };
                chosen.push(next);
                for (i, b) in best.iter_mut().enumerate() {
                    *b = b.min(sq_dist(points, i, points, next));
                }
            }
        }
    }
    DMatrix::from_fn(k, points.ncols(), |c, d| points[(chosen[c], d)])
}

fn lloyd(points: &DMatrix<f64>, mut centers: DMatrix<f64>, max_iters: usize) -> KMeansRun {
    let (n, dim) = points.shape();
    let k = centers.nrows();
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    let mut history = Vec::new();
    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        for i in 0..n {
            let (mut best, mut best_d) = (0, f64::INFINITY);
            for c in 0..k {
                let d = sq_dist(points, i, &centers, c);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            changed |= labels[i] != best;
            labels[i] = best;
            dists[i] = best_d;
        }

        // empty clusters take the point farthest from its current center
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
                if let Some(i) = far {
                    counts[labels[i]] -= 1;
                    counts[c] = 1;
                    labels[i] = c;
                    dists[i] = 0.0;
                    changed = true;
                    for d in 0..dim {
                        centers[(c, d)] = points[(i, d)];
                    }
                }
            }
        }
        history.push(dists.iter().sum());

        let mut sums = DMatrix::<f64>::zeros(k, dim);
        for i in 0..n {
            for d in 0..dim {
                sums[(labels[i], d)] += points[(i, d)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for d in 0..dim {
                    centers[(c, d)] = sums[(c, d)] / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n).map(|i| sq_dist(points, i, &centers, labels[i])).sum();
    KMeansRun { labels, inertia, history }
}

/// Single Lloyd run from the given seeding; exposed for inspection of its history.
pub fn kmeans_once(points: &DMatrix<f64>, k: usize, seeding: Seeding, seed: u64, max_iters: usize) -> Result<KMeansRun> {
    check_k(points.nrows(), k)?;
    let mut rng = rng(seed);
    let centers = seed_centers(points, k, seeding, &mut rng);
    Ok(lloyd(points, centers, max_iters))
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in 1..={n}, got {k}")));
    }
    Ok(())
}

/// k-means on the rows of `points`, best of `opts.restarts` runs by inertia.
///
/// Duplicated rows are allowed; the returned partition may then have fewer
/// than `k` clusters.
pub fn kmeans_rows(points: &DMatrix<f64>, k: usize, opts: &KMeansOptions) -> Result<Partition> {
    check_k(points.nrows(), k)?;
    let mut rng = rng(opts.seed);
    let mut best: Option<KMeansRun> = None;
    for _ in 0..opts.restarts.max(1) {
        let centers = seed_centers(points, k, opts.seeding, &mut rng);
        let run = lloyd(points, centers, opts.max_iters);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(Partition::from_labels(&best.expect("at least one restart").labels))
}

/// Embeds items with the top-`k` eigenvectors of `x` and runs [`kmeans_rows`].
pub fn spectral_rows(x: &DMatrix<f64>, k: usize, opts: &KMeansOptions) -> Result<Partition> {
    let n = x.nrows();
    check_k(n, k)?;
    let (_, vectors) = eigh(x);
    let embedding = DMatrix::from_fn(n, k, |i, c| vectors[(i, n - 1 - c)]);
    kmeans_rows(&embedding, k, opts)
}

fn choose2(m: u64) -> f64 {
    (m * m.saturating_sub(1) / 2) as f64
}

/// Contingency table with rows indexed by the labels of `a`, columns by `b`.
pub fn contingency(a: &Partition, b: &Partition) -> Result<Vec<Vec<u64>>> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: b.n() });
    }
    let mut table = vec![vec![0u64; b.k()]; a.k()];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        table[x][y] += 1;
    }
    Ok(table)
}

/// Hubert–Arabie adjusted Rand index; 1.0 when the denominator vanishes.
pub fn ari(a: &Partition, b: &Partition) -> Result<f64> {
    let table = contingency(a, b)?;
    let index: f64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let rows: f64 = a.cluster_sizes().iter().map(|&c| choose2(c as u64)).sum();
    let cols: f64 = b.cluster_sizes().iter().map(|&c| choose2(c as u64)).sum();
    let pairs = choose2(a.n() as u64);
    if pairs == 0.0 {
        return Ok(1.0);
    }
    let expected = rows * cols / pairs;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// [`ari`] on raw label slices (any label values).
pub fn ari_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    ari(&Partition::from_labels(a), &Partition::from_labels(b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub ari: f64,
    pub k_pred: usize,
    pub k_true: usize,
    /// `k_pred × k_true` counts.
    pub contingency: Vec<Vec<u64>>,
}

pub fn evaluate(predicted: &Partition, truth: &Partition) -> Result<EvalReport> {
    Ok(EvalReport {
        ari: ari(predicted, truth)?,
        k_pred: predicted.k(),
        k_true: truth.k(),
        contingency: contingency(predicted, truth)?,
    })
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("ari={:.6} k_pred={} k_true={}\n", self.ari, self.k_pred, self.k_true);
        for row in &self.contingency {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }
}

pub fn write_partition<W: Write>(mut out: W, partition: &Partition) -> Result<()> {
    writeln!(out, "# partition n={} k={}", partition.n(), partition.k())?;
    for l in partition.labels() {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

pub fn save_partition(path: impl AsRef<Path>, partition: &Partition) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_partition(&mut out, partition)?;
    out.flush()?;
    Ok(())
}

/// Reads a partition file. Labels may be arbitrary integers; they are
/// renumbered by first appearance. A header, when present, must agree.
pub fn read_partition<R: BufRead>(source: R, path: &Path) -> Result<Partition> {
    let err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut header: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix('#') {
            let mut words = rest.split_whitespace();
            if words.next() == Some("partition") {
                for word in words {
                    let (key, value) = word.split_once('=').ok_or_else(|| err(idx + 1, format!("bad header field {word:?}")))?;
                    let value = value.parse().map_err(|_| err(idx + 1, format!("bad header value {word:?}")))?;
                    header.insert(key.to_string(), value);
                }
            }
            continue;
        }
        labels.push(text.parse::<usize>().map_err(|_| err(idx + 1, format!("bad label {text:?}")))?);
    }
    let partition = Partition::from_labels(&labels);
    if let Some(&n) = header.get("n") {
        if n != partition.n() {
            return Err(err(0, format!("header says n={n} but found {} labels", partition.n())));
        }
    }
    if let Some(&k) = header.get("k") {
        if k != partition.k() {
            return Err(err(0, format!("header says k={k} but labels use {} clusters", partition.k())));
        }
    }
    Ok(partition)
}

pub fn load_partition(path: impl AsRef<Path>) -> Result<Partition> {
    let path = path.as_ref();
    read_partition(BufReader::new(std::fs::File::open(path)?), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::ideal_clustering_matrix;

    #[test]
    fn hand_case() {
        assert_eq!(ari_labels(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap(), 0.0);
        assert_eq!(ari_labels(&[0, 0, 1, 1], &[5, 5, 2, 2]).unwrap(), 1.0);
        assert_eq!(ari_labels(&[0, 0, 0], &[1, 1, 1]).unwrap(), 1.0);
        assert!(ari_labels(&[0, 1], &[0, 1, 1]).is_err());
    }

    #[test]
    fn kmeans_recovers_ideal_rows() {
        let truth = Partition::from_labels(&[0, 0, 1, 2, 1, 2, 2, 0, 3]);
        let x = ideal_clustering_matrix(&truth).values;
        let opts = KMeansOptions::default();
        assert_eq!(ari(&kmeans_rows(&x, 4, &opts).unwrap(), &truth).unwrap(), 1.0);
        assert_eq!(ari(&spectral_rows(&x, 4, &opts).unwrap(), &truth).unwrap(), 1.0);
        assert_eq!(kmeans_rows(&x, 1, &opts).unwrap().k(), 1);
        assert!(kmeans_rows(&x, 10, &opts).is_err());
    }

    #[test]
    fn duplicate_rows_with_k_equal_n() {
        let x = ideal_clustering_matrix(&Partition::from_labels(&[0, 0, 1])).values;
        let p = kmeans_rows(&x, 3, &KMeansOptions::default()).unwrap();
        assert_eq!(p.n(), 3);
        assert!(p.k() >= 2);
        let s = spectral_rows(&x, 3, &KMeansOptions::default()).unwrap();
        assert_eq!(s.n(), 3);
    }

    #[test]
    fn lloyd_inertia_never_increases() {
        let mut g = rng(4);
        let points = DMatrix::from_fn(60, 3, |_, _| g.random::<f64>());
        for seeding in [Seeding::Weighted, Seeding::Uniform] {
            let run = kmeans_once(&points, 5, seeding, 9, 100).unwrap();
            for w in run.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", run.history);
            }
        }
    }

    #[test]
    fn partition_file_round_trip() {
        let p = Partition::from_labels(&[1, 1, 0, 2]);
        let mut buf = Vec::new();
        write_partition(&mut buf, &p).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("# partition n=4 k=3\n"));
        assert_eq!(read_partition(buf.as_slice(), Path::new("p")).unwrap(), p);
        assert!(read_partition("# partition n=5 k=3\n0\n1\n2\n".as_bytes(), Path::new("p")).is_err());
        assert!(read_partition("0\nx\n".as_bytes(), Path::new("p")).is_err());
    }

    #[test]
    fn report_contingency() {
        let r = evaluate(&Partition::from_labels(&[0, 0, 1]), &Partition::from_labels(&[0, 1, 1])).unwrap();
        assert_eq!(r.contingency, vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(r.contingency.iter().flatten().sum::<u64>(), 3);
    }
}
