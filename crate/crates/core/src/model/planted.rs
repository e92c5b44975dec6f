//! Planted partitions and latent pairwise similarities.

use rand::seq::SliceRandom;

use super::distributions::{delta_of_distributions, DistributionSpec};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::rng::{stage_rng, Stage};

/// How many comparison queries end up observed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sampling {
    /// Each query is observed independently with this probability.
    Rate(f64),
    /// Exactly this many distinct queries, uniformly without replacement.
    Count(u64),
}

/// Everything needed to regenerate a synthetic instance.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedConfig {
    pub n: usize,
    pub cluster_sizes: Vec<usize>,
    pub f_in: DistributionSpec,
    pub f_out: DistributionSpec,
    pub epsilon: f64,
    pub sampling: Sampling,
    pub seed: u64,
}

impl PlantedConfig {
    /// Returns the separation `δ` of `(f_in, f_out)` after checking every invariant.
    pub fn validate(&self) -> Result<f64> {
        check_sizes(self.n, &self.cluster_sizes)?;
        check_epsilon(self.epsilon)?;
        if let Sampling::Rate(p) = self.sampling {
            check_rate(p)?;
        }
        let delta = delta_of_distributions(&self.f_in, &self.f_out)?;
        if !(delta > 0.0 && delta <= 1.0 + 1e-12) {
            return Err(Error::InvalidDistribution(format!(
                "F_in must dominate F_out with delta in (0, 1], got {delta}"
            )));
        }
        Ok(delta)
    }

    pub fn delta(&self) -> Result<f64> {
        delta_of_distributions(&self.f_in, &self.f_out)
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    Ok(())
}

pub(crate) fn check_rate(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("sampling rate must lie in (0, 1], got {p}")));
    }
    Ok(())
}

fn check_sizes(n: usize, sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::InvalidPartition("no clusters requested".into()));
    }
    if let Some(pos) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidPartition(format!("cluster {pos} requested with size 0")));
    }
    let total: usize = sizes.iter().sum();
    if total != n {
        return Err(Error::InvalidPartition(format!(
            "cluster sizes sum to {total} but n = {n}"
        )));
    }
    Ok(())
}

/// Block-assigns items to clusters in order, then shuffles item indices with
/// the seed.
pub fn generate_partition(n: usize, cluster_sizes: &[usize], seed: u64) -> Result<Partition> {
    check_sizes(n, cluster_sizes)?;
    let mut blocks: Vec<usize> = cluster_sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &size)| std::iter::repeat_n(c, size))
        .collect();
    let mut rng = stage_rng(seed, Stage::Partition);
    blocks.shuffle(&mut rng);
    Partition::new(blocks, cluster_sizes.len())
}

/// `n` equal-ish cluster sizes summing to `n` (the first `n mod k` get one more).
pub fn balanced_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|c| n / k + usize::from(c < n % k)).collect()
}

/// Dense symmetric matrix of latent similarities `w_ij`; the diagonal is unused.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentSimilarities {
    n: usize,
    values: Vec<f64>,
}

impl LatentSimilarities {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w = f(i, j);
                values[i * n + j] = w;
                values[j * n + i] = w;
            }
        }
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Draws `w_ij ∼ F_in` within clusters and `F_out` across, one independent draw
/// per unordered pair in row-major upper-triangle order.
pub fn sample_similarities(
    partition: &Partition,
    f_in: &DistributionSpec,
    f_out: &DistributionSpec,
    seed: u64,
) -> Result<LatentSimilarities> {
    let inside = f_in.sampler()?;
    let outside = f_out.sampler()?;
    let mut rng = stage_rng(seed, Stage::Similarities);
    Ok(LatentSimilarities::from_fn(partition.n(), |i, j| {
        if partition.label(i) == partition.label(j) {
            inside.draw(&mut rng)
        } else {
            outside.draw(&mut rng)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::distributions::{params_for_delta, DistributionFamily};

    #[test]
    fn partition_sizes_survive_shuffle() {
        for seed in 0..20 {
            let p = generate_partition(3, &[1, 2], seed).unwrap();
            assert_eq!(p.cluster_sizes(), &[1, 2]);
        }
        let p = generate_partition(50, &[10, 15, 25], 3).unwrap();
        assert_eq!(p.cluster_sizes(), &[10, 15, 25]);
        assert_eq!(p, generate_partition(50, &[10, 15, 25], 3).unwrap());
    }

    #[test]
    fn some_seed_gives_identity_order() {
        let found = (0..200u64).any(|seed| {
            generate_partition(4, &[2, 2], seed).unwrap().labels() == [0, 0, 1, 1]
        });
        assert!(found);
    }

    #[test]
    fn size_errors() {
        assert!(generate_partition(4, &[3, 2], 0).is_err());
        assert!(generate_partition(4, &[4, 0], 0).is_err());
        assert!(generate_partition(0, &[], 0).is_err());
    }

    #[test]
    fn uniform_single_cluster_mean() {
        let n = 200;
        let p = generate_partition(n, &[n], 11).unwrap();
        let w = sample_similarities(&p, &DistributionSpec::Uniform01, &DistributionSpec::Uniform01, 5)
            .unwrap();
        let pairs = n * (n - 1) / 2;
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                assert_eq!(w.get(i, j), w.get(j, i));
                sum += w.get(i, j);
            }
        }
        let mean = sum / pairs as f64;
        assert!((mean - 0.5).abs() < 4.0 / (pairs as f64).sqrt(), "{mean}");
    }

    #[test]
    fn determinism() {
        let p = generate_partition(30, &[10, 20], 1).unwrap();
        let (a, b) = params_for_delta(DistributionFamily::NormalNormal { sigma: 0.1 }, 0.5).unwrap();
        let w1 = sample_similarities(&p, &a, &b, 9).unwrap();
        let w2 = sample_similarities(&p, &a, &b, 9).unwrap();
        assert_eq!(w1, w2);
        let w3 = sample_similarities(&p, &a, &b, 10).unwrap();
        assert_ne!(w1, w3);
    }

    #[test]
    fn within_beats_cross_at_calibrated_rate() {
        // Direct counting oracle: pairs (in-cluster w, cross w) sharing an item.
        let delta = 0.5;
        let n = 120;
        let p = generate_partition(n, &[60, 60], 2).unwrap();
        let (a, b) = params_for_delta(DistributionFamily::NormalNormal { sigma: 0.1 }, delta).unwrap();
        let w = sample_similarities(&p, &a, &b, 4).unwrap();
        let (mut wins, mut total) = (0u64, 0u64);
        for i in 0..n {
            for j in 0..n {
                if j == i || p.label(j) != p.label(i) {
                    continue;
                }
                for r in 0..n {
                    if p.label(r) == p.label(i) {
                        continue;
                    }
                    total += 1;
                    wins += u64::from(w.get(i, j) > w.get(i, r));
                }
            }
        }
        let freq = wins as f64 / total as f64;
        // pairs are strongly dependent; use the number of independent draws for the error bar
        let independent = (n * (n - 1) / 2) as f64;
        assert!((freq - 0.75).abs() < 4.0 * (0.25 * 0.75 / independent).sqrt() * 4.0, "{freq}");
    }

    #[test]
    fn config_validation() {
        let (a, b) = params_for_delta(DistributionFamily::NormalNormal { sigma: 0.1 }, 0.5).unwrap();
        let mut cfg = PlantedConfig {
            n: 10,
            cluster_sizes: vec![5, 5],
            f_in: a,
            f_out: b,
            epsilon: 0.75,
            sampling: Sampling::Rate(0.1),
            seed: 0,
        };
        assert!((cfg.validate().unwrap() - 0.5).abs() < 1e-9);
        cfg.epsilon = 0.0;
        assert!(cfg.validate().is_err());
        cfg.epsilon = 1.0;
        cfg.sampling = Sampling::Rate(1.5);
        assert!(cfg.validate().is_err());
        cfg.sampling = Sampling::Count(3);
        std::mem::swap(&mut cfg.f_in, &mut cfg.f_out);
        assert!(cfg.validate().is_err());
    }
}
