//! Ideal block similarities `S̃ = ZΣZᵀ` and the matching clustering matrix.

use nalgebra::DMatrix;

use super::solver::ClusteringMatrix;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::similarity::{max_asymmetry, SimilarityKind, SimilarityMatrix};

/// Normalized clustering matrix `X* = ZN⁻¹Zᵀ`: `1/|C|` inside each cluster, 0 across.
pub fn ideal_clustering_matrix(partition: &Partition) -> ClusteringMatrix {
    let n = partition.n();
    let sizes = partition.cluster_sizes();
    let values = DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (partition.label(i), partition.label(j));
        if a == b {
            1.0 / sizes[a] as f64
        } else {
            0.0
        }
    });
    ClusteringMatrix::from_values(values)
}

/// Planted partition together with its `k × k` block similarity `Σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealModel {
    partition: Partition,
    sigma: DMatrix<f64>,
}

impl IdealModel {
    pub fn new(partition: Partition, sigma: DMatrix<f64>) -> Result<Self> {
        let k = partition.k();
        if sigma.nrows() != k || sigma.ncols() != k {
            return Err(Error::DimensionMismatch { expected: k, found: sigma.nrows().max(sigma.ncols()) });
        }
        let asym = max_asymmetry(&sigma);
        if asym > 1e-12 * sigma.amax().max(1.0) || !sigma.iter().all(|v| v.is_finite()) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self { partition, sigma })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// `min_{ℓ≠ℓ'} (Σ_ℓℓ + Σ_ℓ'ℓ')/2 − Σ_ℓℓ'`; infinite for a single cluster.
    pub fn delta1(&self) -> f64 {
        let k = self.sigma.nrows();
        let mut best = f64::INFINITY;
        for a in 0..k {
            for b in a + 1..k {
                let gap = 0.5 * (self.sigma[(a, a)] + self.sigma[(b, b)]) - self.sigma[(a, b)];
                best = best.min(gap);
            }
        }
        best
    }

    /// Dense `S̃`, diagonal included.
    pub fn block_matrix(&self) -> DMatrix<f64> {
        let p = &self.partition;
        DMatrix::from_fn(p.n(), p.n(), |i, j| self.sigma[(p.label(i), p.label(j))])
    }
}

/// `S̃_ij = Σ_{ψ(i)ψ(j)}` as an external similarity.
///
/// The diagonal keeps `Σ_ℓℓ`; use [`SimilarityMatrix::with_zero_diagonal`]
/// when comparing against comparison-built matrices.
pub fn ideal_similarity(model: &IdealModel) -> SimilarityMatrix {
    SimilarityMatrix::from_parts(model.block_matrix(), SimilarityKind::External)
}

/// `Σ` estimated from `s` as block averages of off-diagonal entries. Blocks
/// with no off-diagonal pair (a singleton's own block) get 0.
pub fn block_mean_sigma(s: &DMatrix<f64>, partition: &Partition) -> Result<DMatrix<f64>> {
    let n = partition.n();
    if s.nrows() != n || s.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: s.nrows() });
    }
    let k = partition.k();
    let mut sum = DMatrix::<f64>::zeros(k, k);
    let mut count = DMatrix::<f64>::zeros(k, k);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let (a, b) = (partition.label(i), partition.label(j));
                sum[(a, b)] += s[(i, j)];
                count[(a, b)] += 1.0;
            }
        }
    }
    Ok(sum.zip_map(&count, |t, c| if c > 0.0 { t / c } else { 0.0 }))
}

fn check_planted(p: f64, epsilon: f64, delta: f64, sizes: &[usize]) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&epsilon) || !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "p, epsilon and delta must lie in [0, 1], got {p}, {epsilon}, {delta}"
        )));
    }
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidPartition("cluster sizes must be positive".into()));
    }
    Ok(())
}

/// Expected AddS-3 block similarities under the planted model with
/// observation rate `p`:
/// `Σ_ℓℓ = 2pεδ(n − n_ℓ)`, `Σ_ℓℓ' = −pεδ(n_ℓ + n_ℓ' − 2)`.
pub fn adds3_ideal_sigma(p: f64, epsilon: f64, delta: f64, sizes: &[usize]) -> Result<DMatrix<f64>> {
    check_planted(p, epsilon, delta, sizes)?;
    let scale = p * epsilon * delta;
    let n: usize = sizes.iter().sum();
    let k = sizes.len();
    Ok(DMatrix::from_fn(k, k, |a, b| {
        if a == b {
            2.0 * scale * (n - sizes[a]) as f64
        } else {
            -scale * (sizes[a] + sizes[b]) as f64 + 2.0 * scale
        }
    }))
}

/// Expected AddS-4 block similarities under the planted model with
/// observation rate `p`:
/// `Σ_ℓℓ = pεδ·Σ_m n_m(n − n_m)/2`, `Σ_ℓℓ' = −pεδ·Σ_m C(n_m, 2)`.
pub fn adds4_ideal_sigma(p: f64, epsilon: f64, delta: f64, sizes: &[usize]) -> Result<DMatrix<f64>> {
    check_planted(p, epsilon, delta, sizes)?;
    let scale = p * epsilon * delta;
    let n: usize = sizes.iter().sum();
    let within: f64 = sizes.iter().map(|&m| (m * (n - m)) as f64 / 2.0).sum();
    let across: f64 = sizes.iter().map(|&m| (m * m.saturating_sub(1)) as f64 / 2.0).sum();
    let k = sizes.len();
    Ok(DMatrix::from_fn(k, k, |a, b| if a == b { scale * within } else { -scale * across }))
}
