//! Dense symmetric helpers: eigendecomposition, cone and affine projections.


use nalgebra::{DMatrix, DVector};

pub use super::eigen::{eigenpairs_above, eigenpairs_thresholded, eigenvalues, eigh};

pub fn eigenvalues_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut values = eigenvalues(m);
    values.reverse();
    values
}

/// Largest absolute eigenvalue, i.e. the spectral norm of a symmetric matrix.
pub fn spectral_norm_sym(m: &DMatrix<f64>) -> f64 {
    let values = eigenvalues(m);
    match (values.first(), values.last()) {
        (Some(lo), Some(hi)) => lo.abs().max(hi.abs()),
        _ => 0.0,
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// `Σ λ_i v_i v_iᵀ` over the given eigenpairs.
fn reconstruct(vectors: &DMatrix<f64>, weights: &[(usize, f64)]) -> DMatrix<f64> {
    let n = vectors.nrows();
    if weights.is_empty() {
        return DMatrix::zeros(n, n);
    }
    let mut basis = DMatrix::zeros(n, weights.len());
    let mut scaled = DMatrix::zeros(n, weights.len());
    for (c, &(idx, weight)) in weights.iter().enumerate() {
        let column = vectors.column(idx);
        basis.column_mut(c).copy_from(&column);
        scaled.column_mut(c).zip_apply(&column, |out, v| *out = v * weight);
    }
    &scaled * basis.transpose()
}

/// Euclidean projection onto the PSD cone.
pub fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (values, vectors) = eigenpairs_above(m.clone(), 0.0);
    let keep: Vec<(usize, f64)> = values.into_iter().enumerate().collect();
    reconstruct(&vectors, &keep)
}

/// Shift `θ` such that `Σ max(v_i − θ, 0) = total` (`total ≥ 0`).
pub fn simplex_threshold(values: &[f64], total: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let Some(&top) = sorted.first() else {
        return 0.0;
    };
    let mut cumulative = 0.0;
    let mut theta = top - total;
    for (idx, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - total) / (idx + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    theta
}

/// Euclidean projection of `values` onto `{x ≥ 0, Σx = total}`.
pub fn project_simplex(values: &[f64], total: f64) -> Vec<f64> {
    let theta = simplex_threshold(values, total);
    values.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Householder reflector `H = I − β v vᵀ` mapping `1/√n` to `e_1`.
///
/// Columns `1..n` of `H` are an orthonormal basis of the complement of the
/// all-ones direction.
#[derive(Clone, Debug)]
pub struct OnesReflector {
    v: DVector<f64>,
    beta: f64,
}

impl OnesReflector {
    pub fn new(n: usize) -> Self {
        let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        v[0] -= 1.0;
        let norm2 = v.norm_squared();
        let beta = if norm2 > 0.0 { 2.0 / norm2 } else { 0.0 };
        Self { v, beta }
    }

    /// `H M H` for symmetric `M`, in place.
    pub fn conjugate(&self, m: &mut DMatrix<f64>) {
        if self.beta == 0.0 {
            return;
        }
        let w = &*m * &self.v;
        let gamma = self.v.dot(&w);
        let b = self.beta;
        let n = m.nrows();
        for j in 0..n {
            let vj = self.v[j];
            let wj = w[j];
            for i in 0..n {
                m[(i, j)] += -b * self.v[i] * wj - b * w[i] * vj + b * b * gamma * self.v[i] * vj;
            }
        }
    }
}

/// Projection onto `{X ⪰ 0, X = Xᵀ, X·1 = 1}` and optionally `tr X = k`.
///
/// Every such `X` splits as `11ᵀ/n + Y` with `Y ⪰ 0` living on the complement
/// of the ones vector, so the projection is one eigendecomposition of size
/// `n − 1` followed by clipping (or a simplex projection when the trace is
/// fixed) of the eigenvalues.
#[derive(Clone, Debug)]
pub struct SpectralAffineProjector {
    n: usize,
    reflector: OnesReflector,
    trace: Option<f64>,
}

impl SpectralAffineProjector {
    pub fn new(n: usize, trace: Option<f64>) -> Self {
        Self { n, reflector: OnesReflector::new(n), trace }
    }

    pub fn project(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n;
        let ones = 1.0 / n as f64;
        if n == 1 {
            return DMatrix::from_element(1, 1, 1.0);
        }
        let mut m = v.clone();
        symmetrize(&mut m);
        self.reflector.conjugate(&mut m);
        let inner = DMatrix::from_vec(n - 1, n - 1, m.as_slice().chunks_exact(n).skip(1).flat_map(|col| &col[1..]).copied().collect());
        let inner = match self.trace {
            None => {
                let (values, vectors) = eigenpairs_above(inner, 0.0);
                let keep: Vec<(usize, f64)> = values.into_iter().enumerate().collect();
                reconstruct(&vectors, &keep)
            }
            Some(k) => {
                // eigenvalues alone fix the simplex threshold; vectors are
                // then only needed above it
                let total = (k - 1.0).max(0.0);
                let (theta, values, vectors) = eigenpairs_thresholded(inner, |all| simplex_threshold(all, total));
                let keep: Vec<(usize, f64)> =
                    values.into_iter().map(|l| l - theta).enumerate().filter(|&(_, l)| l > 0.0).collect();
                reconstruct(&vectors, &keep)
            }
        };
        let mut y = DMatrix::zeros(n, n);
        for (col, src) in y.as_mut_slice().chunks_exact_mut(n).skip(1).zip(inner.as_slice().chunks_exact(n - 1)) {
            col[1..].copy_from_slice(src);
        }
        self.reflector.conjugate(&mut y);
        y.add_scalar_mut(ones);
        symmetrize(&mut y);
        y
    }
}

/// Projection onto `{X = Xᵀ, X·1 = 1}` and optionally `tr X = k`:
/// `X = V + a1ᵀ + 1aᵀ + γI` with the multipliers in closed form.
pub fn project_affine(v: &DMatrix<f64>, trace: Option<f64>) -> DMatrix<f64> {
    let n = v.nrows();
    let nf = n as f64;
    let mut x = v.clone();
    symmetrize(&mut x);
    let rows: Vec<f64> = (0..n).map(|i| x.row(i).sum()).collect();
    let b: Vec<f64> = rows.iter().map(|r| 1.0 - r).collect();
    let b_sum: f64 = b.iter().sum();
    let (a_sum, gamma) = match trace {
        None => (b_sum / (2.0 * nf), 0.0),
        Some(k) if n > 1 => {
            let kk = k - x.trace();
            let a_sum = (b_sum - kk) / (2.0 * (nf - 1.0));
            (a_sum, (kk - 2.0 * a_sum) / nf)
        }
        Some(_) => (b_sum / (2.0 * nf), 0.0),
    };
    let a: Vec<f64> = b.iter().map(|bi| (bi - a_sum - gamma) / nf).collect();
    for i in 0..n {
        for j in 0..n {
            x[(i, j)] += a[i] + a[j];
        }
        x[(i, i)] += gamma;
    }
    x
}
