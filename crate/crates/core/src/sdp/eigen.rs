//! Symmetric eigensolvers: LAPACK `dsyevr` when the `lapack` feature is on,
//! nalgebra otherwise. All results are in ascending eigenvalue order.

use nalgebra::{DMatrix, DVector};

#[cfg(feature = "lapack")]
mod backend {
    use std::os::raw::{c_char, c_int};

    use nalgebra::DMatrix;

    extern crate openblas_src;

    pub enum Range {
        All,
        Above(f64),
    }

    /// Eigenvalues (and optionally eigenvectors) of the symmetric `m`,
    /// restricted to `range`. Only the lower triangle is read.
    pub fn syevr(mut m: DMatrix<f64>, range: Range, vectors: bool) -> (Vec<f64>, DMatrix<f64>) {
        let n = m.nrows();
        if n == 0 {
            return (Vec::new(), DMatrix::zeros(0, 0));
        }
        let ni = n as c_int;
        let jobz = if vectors { b'V' } else { b'N' } as c_char;
        let (rng, vl) = match range {
            Range::All => (b'A' as c_char, 0.0),
            Range::Above(floor) => (b'V' as c_char, floor),
        };
        let uplo = b'L' as c_char;
        let (vu, il, iu, abstol) = (f64::INFINITY, 0 as c_int, 0 as c_int, 0.0f64);
        let mut found: c_int = 0;
        let mut w = vec![0.0; n];
        let zcols = if vectors { n } else { 1 };
        let mut z = vec![0.0; n * zcols];
        let mut isuppz = vec![0 as c_int; 2 * n];
        let mut info: c_int = 0;
        let mut lwork: c_int = -1;
        let mut liwork: c_int = -1;
        let mut work = vec![0.0; 1];
        let mut iwork = vec![0 as c_int; 1];
        for _ in 0..2 {
            // SAFETY: every buffer has the size dsyevr documents for these arguments;
            // the first pass only queries workspace sizes.
            unsafe {
                lapack_sys::dsyevr_(
                    &jobz,
                    &rng,
                    &uplo,
                    &ni,
                    m.as_mut_slice().as_mut_ptr(),
                    &ni,
                    &vl,
                    &vu,
                    &il,
                    &iu,
                    &abstol,
                    &mut found,
                    w.as_mut_ptr(),
                    z.as_mut_ptr(),
                    &ni,
                    isuppz.as_mut_ptr(),
                    work.as_mut_ptr(),
                    &lwork,
                    iwork.as_mut_ptr(),
                    &liwork,
                    &mut info,
                );
            }
            assert!(info == 0, "dsyevr failed with info = {info}");
            if lwork == -1 {
                lwork = (work[0] as c_int).max(26 * ni);
                liwork = iwork[0].max(10 * ni);
                work = vec![0.0; lwork as usize];
                iwork = vec![0; liwork as usize];
            }
        }
        let found = found as usize;
        w.truncate(found);
        let vecs = if vectors { DMatrix::from_column_slice(n, found, &z[..n * found]) } else { DMatrix::zeros(n, 0) };
        (w, vecs)
    }

    /// Eigenpairs strictly above the threshold `select` computes from the
    /// full (ascending) spectrum, with a single tridiagonal reduction.
    pub fn thresholded(mut m: DMatrix<f64>, select: impl FnOnce(&[f64]) -> f64) -> (f64, Vec<f64>, DMatrix<f64>) {
        let n = m.nrows();
        if n == 0 {
            return (select(&[]), Vec::new(), DMatrix::zeros(0, 0));
        }
        let ni = n as c_int;
        let lower = b'L' as c_char;
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        let mut tau = vec![0.0; n.max(2) - 1];
        let lwork = (64 * n) as c_int;
        let mut work = vec![0.0; 64 * n];
        let mut info: c_int = 0;
        // SAFETY: buffer sizes follow the LAPACK documentation for n×n input
        // (tau n−1, work 64n ≥ n·nb).
        unsafe {
            lapack_sys::dsytrd_(&lower, &ni, m.as_mut_slice().as_mut_ptr(), &ni, d.as_mut_ptr(), e.as_mut_ptr(), tau.as_mut_ptr(), work.as_mut_ptr(), &lwork, &mut info);
        }
        assert!(info == 0, "dsytrd failed with info = {info}");

        let mut values = d.clone();
        let mut off = e.clone();
        // SAFETY: values has n entries, off at least n−1.
        unsafe { lapack_sys::dsterf_(&ni, values.as_mut_ptr(), off.as_mut_ptr(), &mut info) };
        assert!(info == 0, "dsterf failed with info = {info}");
        let theta = select(&values);
        if values.last().is_none_or(|&top| top <= theta) {
            return (theta, Vec::new(), DMatrix::zeros(n, 0));
        }

        let (jobz, range) = (b'V' as c_char, b'V' as c_char);
        let (vu, il, iu) = (f64::INFINITY, 0 as c_int, 0 as c_int);
        let mut found: c_int = 0;
        let mut w = vec![0.0; n];
        let mut z = vec![0.0; n * n];
        let mut isuppz = vec![0 as c_int; 2 * n];
        let mut tryrac: c_int = 1;
        let lwork_mr = (18 * n) as c_int;
        let mut work_mr = vec![0.0; 18 * n];
        let liwork = (10 * n) as c_int;
        let mut iwork = vec![0 as c_int; 10 * n];
        // SAFETY: z is n×n with nzc = n; work and iwork meet the documented
        // minimums (18n, 10n) for jobz = 'V'.
        unsafe {
            lapack_sys::dstemr_(
                &jobz, &range, &ni, d.as_mut_ptr(), e.as_mut_ptr(), &theta, &vu, &il, &iu, &mut found,
                w.as_mut_ptr(), z.as_mut_ptr(), &ni, &ni, isuppz.as_mut_ptr(), &mut tryrac,
                work_mr.as_mut_ptr(), &lwork_mr, iwork.as_mut_ptr(), &liwork, &mut info,
            );
        }
        assert!(info == 0, "dstemr failed with info = {info}");
        let found = found as usize;
        w.truncate(found);
        if found == 0 {
            return (theta, w, DMatrix::zeros(n, 0));
        }

        let (left, notrans) = (b'L' as c_char, b'N' as c_char);
        let cols = found as c_int;
        // SAFETY: m holds the reflectors from dsytrd, z the first `found`
        // columns of an n×n buffer, work 64n ≥ found·nb.
        unsafe {
            lapack_sys::dormtr_(
                &left, &lower, &notrans, &ni, &cols, m.as_slice().as_ptr(), &ni, tau.as_ptr(),
                z.as_mut_ptr(), &ni, work.as_mut_ptr(), &lwork, &mut info,
            );
        }
        assert!(info == 0, "dormtr failed with info = {info}");
        (theta, w, DMatrix::from_column_slice(n, found, &z[..n * found]))
    }
}

#[cfg(not(feature = "lapack"))]
mod backend {
    use nalgebra::{DMatrix, SymmetricEigen};

    pub enum Range {
        All,
        Above(f64),
    }

    pub fn syevr(m: DMatrix<f64>, range: Range, vectors: bool) -> (Vec<f64>, DMatrix<f64>) {
        let n = m.nrows();
        let floor = match range {
            Range::All => f64::NEG_INFINITY,
            Range::Above(f) => f,
        };
        if !vectors {
            let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().filter(|&v| v > floor).collect();
            values.sort_by(f64::total_cmp);
            return (values, DMatrix::zeros(n, 0));
        }
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > floor).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = DMatrix::from_fn(n, order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vecs)
    }

    pub fn thresholded(m: DMatrix<f64>, select: impl FnOnce(&[f64]) -> f64) -> (f64, Vec<f64>, DMatrix<f64>) {
        let n = m.nrows();
        let eig = SymmetricEigen::new(m);
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        let theta = select(&values);
        let mut order: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > theta).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let kept = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = DMatrix::from_fn(n, order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
        (theta, kept, vecs)
    }
}

use backend::{syevr, thresholded, Range};

/// Full decomposition: eigenvalues ascending with matching eigenvector columns.
pub fn eigh(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (values, vectors) = syevr(m.clone(), Range::All, true);
    (DVector::from_vec(values), vectors)
}

/// Eigenvalues ascending.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    syevr(m.clone(), Range::All, false).0
}

/// Eigenpairs with eigenvalue strictly above `floor`, ascending.
pub fn eigenpairs_above(m: DMatrix<f64>, floor: f64) -> (Vec<f64>, DMatrix<f64>) {
    syevr(m, Range::Above(floor), true)
}

/// Eigenpairs strictly above `select(spectrum)`, ascending, together with
/// that threshold. `select` sees every eigenvalue in ascending order.
pub fn eigenpairs_thresholded(m: DMatrix<f64>, select: impl FnOnce(&[f64]) -> f64) -> (f64, Vec<f64>, DMatrix<f64>) {
    thresholded(m, select)
}
