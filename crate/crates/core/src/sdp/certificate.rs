//! Exact-recovery certificate and optimality diagnostics for SDP-λ.

use nalgebra::{DMatrix, DVector};

use super::ideal::{ideal_clustering_matrix, IdealModel};
use super::linalg::{min_eigenvalue, spectral_norm_sym};
use super::solver::FeasibilityReport;
use crate::error::{Error, Result};
use crate::partition::Partition;

/// Slack applied to both interval endpoints when testing membership.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// Sufficient condition for `X*` to be the unique SDP-λ optimum:
/// `lambda_lo < λ < lambda_hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateReport {
    pub delta1: f64,
    pub delta2: f64,
    /// `‖S − S̃‖₂`
    pub spectral_gap: f64,
    pub lambda_lo: f64,
    /// `n_min · min{Δ1/2, Δ1 − 6Δ2}`
    pub lambda_hi: f64,
    pub nonempty: bool,
}

impl CertificateReport {
    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lambda_lo + BOUNDARY_TOLERANCE && lambda <= self.lambda_hi - BOUNDARY_TOLERANCE
    }

    /// Midpoint of the interval, if it is nonempty.
    pub fn midpoint(&self) -> Option<f64> {
        self.nonempty.then(|| 0.5 * (self.lambda_lo + self.lambda_hi))
    }
}

pub fn certificate(s: &DMatrix<f64>, model: &IdealModel) -> Result<CertificateReport> {
    let partition = model.partition();
    let n = partition.n();
    if s.nrows() != n || s.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: s.nrows() });
    }
    let diff = s - model.block_matrix();
    let sizes = partition.cluster_sizes();
    let mut delta2: f64 = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; partition.k()];
        for j in 0..n {
            sums[partition.label(j)] += diff[(i, j)];
        }
        for (sum, &m) in sums.iter().zip(sizes) {
            delta2 = delta2.max((sum / m as f64).abs());
        }
    }
    let delta1 = model.delta1();
    let spectral_gap = spectral_norm_sym(&diff);
    let n_min = partition.min_cluster_size() as f64;
    let lambda_hi = n_min * (0.5 * delta1).min(delta1 - 6.0 * delta2);
    Ok(CertificateReport {
        delta1,
        delta2,
        spectral_gap,
        lambda_lo: spectral_gap,
        lambda_hi,
        nonempty: spectral_gap < lambda_hi,
    })
}

/// Optimality conditions of SDP-λ evaluated at a candidate `X`.
///
/// Multipliers `(α, Λ, Γ)` follow the block witness built from the clusters
/// read off `X` (connected components of its support). When `X` is not close
/// to the ideal matrix of those clusters the witness is still reported, but
/// only `feasibility` and `duality_gap` are meaningful.
#[derive(Clone, Debug, PartialEq)]
pub struct KktReport {
    pub partition: Partition,
    /// `‖X − X*(partition)‖_F`
    pub block_distance: f64,
    pub block_structured: bool,
    /// `‖S − λI + Λ + Γ − 1αᵀ − α1ᵀ‖_F`
    pub stationarity: f64,
    pub feasibility: FeasibilityReport,
    /// `max(0, −λ_min(Λ))`
    pub lambda_psd_violation: f64,
    /// `max(0, −min Γ)`
    pub gamma_negativity: f64,
    /// `|⟨Λ, X⟩|`
    pub complementarity_lambda: f64,
    /// `‖Γ ∘ X‖_F`
    pub complementarity_gamma: f64,
    /// `2·1ᵀα − (⟨S, X⟩ − λ·tr X)`
    pub duality_gap: f64,
}

impl KktReport {
    pub fn complementarity(&self) -> f64 {
        self.complementarity_lambda + self.complementarity_gamma
    }

    pub fn max_residual(&self) -> f64 {
        let f = &self.feasibility;
        [
            self.stationarity,
            f.negativity,
            f.psd_violation,
            f.row_sum_error,
            f.asymmetry,
            self.lambda_psd_violation,
            self.gamma_negativity,
            self.complementarity_lambda,
            self.complementarity_gamma,
            self.duality_gap.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Clusters of `x` as connected components of `{X_ij > 1/(2n)}`.
pub fn support_partition(x: &DMatrix<f64>) -> Partition {
    let n = x.nrows();
    let threshold = 0.5 / n.max(1) as f64;
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        labels[start] = next;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if labels[j] == usize::MAX && (x[(i, j)] > threshold || x[(j, i)] > threshold) {
                    labels[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    Partition::from_labels(&labels)
}

pub fn kkt_residuals(s: &DMatrix<f64>, lambda: f64, x: &DMatrix<f64>) -> Result<KktReport> {
    let n = s.nrows();
    if s.ncols() != n || x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.nrows() });
    }
    let partition = support_partition(x);
    let members = partition.members();
    let block_distance = (x - &ideal_clustering_matrix(&partition).values).norm();

    // α_j = S_jj 1/n_j − (λ/(2n_j) + 1ᵀS_jj1/(2n_j²))·1
    let mut alpha = DVector::zeros(n);
    for block in &members {
        let m = block.len() as f64;
        let row_sums: Vec<f64> = block.iter().map(|&i| block.iter().map(|&j| s[(i, j)]).sum()).collect();
        let total: f64 = row_sums.iter().sum();
        let shift = lambda / (2.0 * m) + total / (2.0 * m * m);
        for (&i, r) in block.iter().zip(&row_sums) {
            alpha[i] = r / m - shift;
        }
    }

    let mut big_lambda = DMatrix::zeros(n, n);
    let mut gamma = DMatrix::zeros(n, n);
    for (a, ca) in members.iter().enumerate() {
        for (b, cb) in members.iter().enumerate() {
            if a == b {
                for &i in ca {
                    for &j in ca {
                        let id = if i == j { lambda } else { 0.0 };
                        big_lambda[(i, j)] = -s[(i, j)] + alpha[i] + alpha[j] + id;
                    }
                }
                continue;
            }
            // Λ_ab = −(I − 11ᵀ/n_a) S_ab (I − 11ᵀ/n_b): double centering of the block
            let (ma, mb) = (ca.len() as f64, cb.len() as f64);
            let row_mean: Vec<f64> = ca.iter().map(|&i| cb.iter().map(|&j| s[(i, j)]).sum::<f64>() / mb).collect();
            let col_mean: Vec<f64> = cb.iter().map(|&j| ca.iter().map(|&i| s[(i, j)]).sum::<f64>() / ma).collect();
            let grand = row_mean.iter().sum::<f64>() / ma;
            for (p, &i) in ca.iter().enumerate() {
                for (q, &j) in cb.iter().enumerate() {
                    let centered = s[(i, j)] - row_mean[p] - col_mean[q] + grand;
                    big_lambda[(i, j)] = -centered;
                    gamma[(i, j)] = -s[(i, j)] + centered + alpha[i] + alpha[j];
                }
            }
        }
    }

    let mut stationarity = s + &big_lambda + &gamma;
    for i in 0..n {
        stationarity[(i, i)] -= lambda;
        for j in 0..n {
            stationarity[(i, j)] -= alpha[i] + alpha[j];
        }
    }

    let primal = s.component_mul(x).sum() - lambda * x.trace();
    Ok(KktReport {
        block_structured: block_distance <= 1e-3,
        partition,
        block_distance,
        stationarity: stationarity.norm(),
        feasibility: FeasibilityReport::of(x),
        lambda_psd_violation: (-min_eigenvalue(&big_lambda)).max(0.0),
        gamma_negativity: (-gamma.min()).max(0.0),
        complementarity_lambda: big_lambda.component_mul(x).sum().abs(),
        complementarity_gamma: gamma.component_mul(x).norm(),
        duality_gap: 2.0 * alpha.sum() - primal,
    })
}
