//! ADMM for the clustering SDPs
//!
//! ```text
//! SDP-λ:  maximize ⟨S, X⟩ − λ·tr X   s.t. X ≥ 0, X ⪰ 0, X·1 = 1
//! SDP-k:  maximize ⟨S, X⟩            s.t. X ≥ 0, X ⪰ 0, X·1 = 1, tr X = k
//! ```
//!
//! Both are written as `minimize ⟨C, X⟩` over an intersection of sets that
//! each have a closed-form projection, and solved with scaled-form ADMM.
//!
//! [`Splitting::TwoBlock`] (default) pairs the set `{X ⪰ 0, X·1 = 1 (, tr X = k)}`,
//! projected with one eigendecomposition on the complement of the ones vector,
//! against the nonnegative orthant. [`Splitting::Consensus`] keeps three
//! separate sets (PSD cone, orthant, affine constraints) tied to a consensus
//! variable. Both converge to the same optimum; the two-block form needs far
//! fewer iterations.

use std::io::Write;

use nalgebra::DMatrix;

use super::linalg::{min_eigenvalue, project_affine, project_psd, spectral_norm_sym, SpectralAffineProjector};
use crate::error::{Error, Result};
use crate::similarity::max_asymmetry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Splitting {
    #[default]
    TwoBlock,
    Consensus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// ADMM penalty; `None` picks `max(1, ‖S‖₂ / n)`.
    pub rho: Option<f64>,
    /// Slack allowed when checking the returned matrix against the constraints.
    pub tol_feas: f64,
    /// Stop once both residuals fall below this. Two-block residuals are
    /// largest-entry norms (primal in units of X, dual relative to the
    /// largest cost entry); consensus residuals are Frobenius norms in units
    /// of X, since its returned point is only as feasible as they are small.
    pub tol_res: f64,
    pub max_iters: usize,
    /// Over-relaxation factor in `(0, 2)`; 1 disables it.
    pub relaxation: f64,
    pub splitting: Splitting,
    /// Rescale `rho` during the run to keep primal and dual residuals balanced
    /// (two-block splitting only).
    pub adaptive_rho: bool,
    /// Keep one [`IterateLog`] entry every this many iterations (0 = none).
    pub log_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rho: None,
            tol_feas: 1e-6,
            tol_res: 1e-6,
            max_iters: 20_000,
            relaxation: 1.6,
            splitting: Splitting::TwoBlock,
            adaptive_rho: true,
            log_every: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        if let Some(rho) = self.rho {
            positive("rho", rho)?;
        }
        positive("tol_feas", self.tol_feas)?;
        positive("tol_res", self.tol_res)?;
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "relaxation must lie in (0, 2), got {}",
                self.relaxation
            )));
        }
        Ok(())
    }

    fn rho_for(&self, s: &DMatrix<f64>) -> f64 {
        self.rho.unwrap_or_else(|| {
            let n = s.nrows().max(1) as f64;
            (spectral_norm_sym(s) / n).max(1.0)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterateLog {
    pub iter: usize,
    pub objective: f64,
    pub primal_res: f64,
    pub dual_res: f64,
}

/// Writes `iter,objective,primal_res,dual_res` rows.
pub fn write_iterate_log<W: Write>(mut out: W, log: &[IterateLog]) -> Result<()> {
    writeln!(out, "iter,objective,primal_res,dual_res")?;
    for row in log {
        writeln!(out, "{},{:e},{:e},{:e}", row.iter, row.objective, row.primal_res, row.dual_res)?;
    }
    Ok(())
}

/// Estimated normalized clustering matrix with solver diagnostics.
#[derive(Clone, Debug)]
pub struct ClusteringMatrix {
    pub values: DMatrix<f64>,
    pub objective: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub iterations: usize,
    pub converged: bool,
    pub log: Vec<IterateLog>,
}

/// How far a matrix is from the SDP feasible set, each measure as a worst case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibilityReport {
    /// `max(0, −min_ij X_ij)`
    pub negativity: f64,
    /// `max(0, −λ_min(X))`
    pub psd_violation: f64,
    /// `max_i |Σ_j X_ij − 1|`
    pub row_sum_error: f64,
    pub asymmetry: f64,
    pub trace: f64,
}

impl FeasibilityReport {
    pub fn of(x: &DMatrix<f64>) -> Self {
        let n = x.nrows();
        let negativity = (-x.min()).max(0.0);
        let psd_violation = if n == 0 { 0.0 } else { (-min_eigenvalue(x)).max(0.0) };
        let row_sum_error = (0..n).map(|i| (x.row(i).sum() - 1.0).abs()).fold(0.0, f64::max);
        Self { negativity, psd_violation, row_sum_error, asymmetry: max_asymmetry(x), trace: x.trace() }
    }

    /// Checks the constraints of SDP-λ (and `tr X = k` when given) within `tol`.
    pub fn is_feasible(&self, tol: f64, trace: Option<f64>) -> bool {
        self.negativity <= tol
            && self.psd_violation <= tol
            && self.row_sum_error <= tol
            && self.asymmetry <= tol
            && self.trace >= -tol
            && trace.is_none_or(|k| (self.trace - k).abs() <= tol)
    }
}

impl ClusteringMatrix {
    /// Wraps a matrix known to be feasible (e.g. an ideal clustering matrix).
    pub fn from_values(values: DMatrix<f64>) -> Self {
        Self {
            values,
            objective: f64::NAN,
            primal_res: 0.0,
            dual_res: 0.0,
            iterations: 0,
            converged: true,
            log: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.values.trace()
    }

    pub fn feasibility(&self) -> FeasibilityReport {
        FeasibilityReport::of(&self.values)
    }
}

fn check_input(s: &DMatrix<f64>, opts: &SolverOptions) -> Result<()> {
    opts.validate()?;
    if s.nrows() != s.ncols() {
        return Err(Error::DimensionMismatch { expected: s.nrows(), found: s.ncols() });
    }
    if s.nrows() == 0 {
        return Err(Error::InvalidParameter("empty similarity matrix".into()));
    }
    if !s.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("similarity matrix has non-finite entries".into()));
    }
    let asym = max_asymmetry(s);
    if asym > 1e-9 * s.amax().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Solves SDP-λ for similarity `s`.
///
/// Non-convergence is reported through `converged = false` rather than an error.
pub fn solve_sdp_lambda(s: &DMatrix<f64>, lambda: f64, opts: &SolverOptions) -> Result<ClusteringMatrix> {
    check_input(s, opts)?;
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")));
    }
    let mut cost = -s;
    for i in 0..s.nrows() {
        cost[(i, i)] += lambda;
    }
    let mut out = run(&cost, None, opts.rho_for(s), opts);
    out.objective = (s.component_mul(&out.values)).sum() - lambda * out.values.trace();
    Ok(out)
}

/// Solves SDP-k for similarity `s`.
pub fn solve_sdp_k(s: &DMatrix<f64>, k: usize, opts: &SolverOptions) -> Result<ClusteringMatrix> {
    check_input(s, opts)?;
    let n = s.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in 1..={n}, got {k}")));
    }
    Ok(solve_sdp_k_from(s, k, opts, None)?.0)
}

/// Two-block ADMM state `(W + U, rho)` left behind by a solve.
#[derive(Clone, Debug)]
pub(crate) struct AdmmState {
    sum: DMatrix<f64>,
    rho: f64,
}

/// SDP-k, resuming from `start` (a state of the same problem, e.g. from a
/// looser-tolerance solve) when given. Consensus ignores `start` and returns
/// no state.
pub(crate) fn solve_sdp_k_from(
    s: &DMatrix<f64>,
    k: usize,
    opts: &SolverOptions,
    start: Option<AdmmState>,
) -> Result<(ClusteringMatrix, Option<AdmmState>)> {
    check_input(s, opts)?;
    let n = s.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in 1..={n}, got {k}")));
    }
    let cost = -s;
    let (mut out, state) = match opts.splitting {
        Splitting::TwoBlock => {
            let start = start.filter(|st| st.sum.nrows() == n).unwrap_or_else(|| AdmmState::cold(n, Some(k as f64), opts.rho_for(s)));
            let (out, state) = two_block(&cost, Some(k as f64), start, opts);
            (out, Some(state))
        }
        Splitting::Consensus => (consensus(&cost, Some(k as f64), opts.rho_for(s), opts), None),
    };
    out.objective = (s.component_mul(&out.values)).sum();
    Ok((out, state))
}

impl AdmmState {
    fn cold(n: usize, trace: Option<f64>, rho: f64) -> Self {
        let projector = SpectralAffineProjector::new(n, trace);
        Self { sum: projector.project(&DMatrix::from_element(n, n, 1.0 / n as f64)), rho }
    }
}

fn run(cost: &DMatrix<f64>, trace: Option<f64>, rho: f64, opts: &SolverOptions) -> ClusteringMatrix {
    match opts.splitting {
        Splitting::TwoBlock => two_block(cost, trace, AdmmState::cold(cost.nrows(), trace, rho), opts).0,
        Splitting::Consensus => consensus(cost, trace, rho, opts),
    }
}

const REBALANCE_EVERY: usize = 10;
const REBALANCE_RATIO: f64 = 1.5;

fn frob_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn linear(cost: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    -cost.component_mul(x).sum()
}

/// Moves `x`, which already satisfies `X ⪰ 0, X·1 = 1 (, tr X = k)`, the
/// shortest distance along the segment towards the strictly positive point
/// `aI + b11ᵀ` of the same set so that every entry becomes nonnegative.
fn pull_inside(x: &mut DMatrix<f64>, trace: Option<f64>) {
    let n = x.nrows();
    if n < 2 || x.min() >= 0.0 {
        return;
    }
    let nf = n as f64;
    let (a, b) = match trace {
        Some(k) => ((k - 1.0) / (nf - 1.0), (nf - k) / (nf * (nf - 1.0))),
        None => (0.0, 1.0 / nf),
    };
    let mut t: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let v = x[(i, j)];
            if v < 0.0 {
                let anchor = if i == j { a + b } else { b };
                t = t.max(if anchor > 0.0 { -v / (anchor - v) } else { 1.0 });
            }
        }
    }
    let t = t.min(1.0);
    for j in 0..n {
        for i in 0..n {
            let anchor = if i == j { a + b } else { b };
            x[(i, j)] = ((1.0 - t) * x[(i, j)] + t * anchor).max(0.0);
        }
    }
}

/// Residual balancing: returns the rescaled penalty when primal and dual
/// residuals (each relative to its own scale) drift apart.
fn rebalance(rho: f64, primal_rel: f64, dual_rel: f64) -> Option<f64> {
    if !(primal_rel > 0.0 && dual_rel > 0.0) {
        return None;
    }
    let ratio = (primal_rel / dual_rel).sqrt();
    if (1.0 / REBALANCE_RATIO..=REBALANCE_RATIO).contains(&ratio) {
        return None;
    }
    Some((rho * ratio).clamp(1e-6, 1e9))
}

fn two_block(cost: &DMatrix<f64>, trace: Option<f64>, start: AdmmState, opts: &SolverOptions) -> (ClusteringMatrix, AdmmState) {
    let n = cost.nrows();
    let projector = SpectralAffineProjector::new(n, trace);
    let cost_scale = cost.amax().max(1.0);
    let AdmmState { sum: mut s, mut rho } = start;
    let mut step = cost / rho;
    let alpha = opts.relaxation;

    // The iteration is a fixed-point map on s = W + U, with W = max(s, 0)
    // and U = min(s, 0), so W − U = |s|.
    let mut y = s.clone();
    let mut input = DMatrix::zeros(n, n);
    let mut t = DMatrix::zeros(n, n);
    let mut log = Vec::new();
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;

    for iter in 1..=opts.max_iters {
        iterations = iter;
        for ((o, &sv), &st) in input.iter_mut().zip(s.iter()).zip(step.iter()) {
            *o = sv.abs() - st;
        }
        y = projector.project(&input);

        let balance = opts.adaptive_rho && iter % REBALANCE_EVERY == 0;
        let (mut gap, mut moved) = (0.0f64, 0.0f64);
        // squared norms of Y, W_next, W_next − W and U_next, for rebalancing
        let (mut yy, mut ww, mut dd, mut uu) = (0.0, 0.0, 0.0, 0.0);
        for ((tv, &yv), &sv) in t.iter_mut().zip(y.iter()).zip(s.iter()) {
            let w = sv.max(0.0);
            let next = yv * alpha + w * (1.0 - alpha) + (sv - w);
            let w_next = next.max(0.0);
            *tv = next;
            gap = gap.max((yv - w_next).abs());
            moved = moved.max((w_next - w).abs());
            if balance {
                yy += yv * yv;
                ww += w_next * w_next;
                dd += (w_next - w) * (w_next - w);
                uu += (next - w_next) * (next - w_next);
            }
        }
        primal = gap;
        dual = rho * moved / cost_scale;
        if opts.log_every > 0 && iter % opts.log_every == 0 {
            log.push(IterateLog { iter, objective: linear(cost, &y), primal_res: primal, dual_res: dual });
        }
        if primal <= opts.tol_res && dual <= opts.tol_res {
            converged = true;
            break;
        }
        std::mem::swap(&mut s, &mut t);
        if balance {
            // primal: largest-entry gap relative to the size of the iterate;
            // dual: change in W relative to the scaled multiplier
            let (primal_rel, dual_rel) = (primal / yy.max(ww).sqrt().max(1e-12), dd.sqrt() / uu.sqrt().max(1e-12));
            if let Some(next) = rebalance(rho, primal_rel, dual_rel) {
                let scale = rho / next;
                s.apply(|v| {
                    let w = v.max(0.0);
                    *v = w + (*v - w) * scale;
                });
                rho = next;
                step = cost / rho;
            }
        }
    }

    pull_inside(&mut y, trace);
    let out = ClusteringMatrix {
        values: y,
        objective: f64::NAN,
        primal_res: primal,
        dual_res: dual,
        iterations,
        converged,
        log,
    };
    (out, AdmmState { sum: s, rho })
}

fn consensus(cost: &DMatrix<f64>, trace: Option<f64>, rho: f64, opts: &SolverOptions) -> ClusteringMatrix {
    let n = cost.nrows();
    let step = cost / rho;
    let alpha = opts.relaxation;
    let mut z = project_affine(&DMatrix::from_element(n, n, 1.0 / n as f64), trace);
    let mut duals = [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
    let mut log = Vec::new();
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;

    for iter in 1..=opts.max_iters {
        iterations = iter;
        let blocks = [
            project_psd(&(&z - &duals[0])),
            (&z - &duals[1]).map(|v| v.max(0.0)),
            project_affine(&(&z - &duals[2] - &step), trace),
        ];
        let relaxed: Vec<DMatrix<f64>> = blocks.iter().map(|x| x * alpha + &z * (1.0 - alpha)).collect();
        let mut z_next = DMatrix::zeros(n, n);
        for (x, u) in relaxed.iter().zip(&duals) {
            z_next += x + u;
        }
        z_next /= 3.0;
        for (u, x) in duals.iter_mut().zip(&relaxed) {
            *u += x - &z_next;
        }
        primal = blocks.iter().map(|x| frob_diff(x, &z_next).powi(2)).sum::<f64>().sqrt();
        dual = 3f64.sqrt() * frob_diff(&z_next, &z);
        z = z_next;
        if opts.log_every > 0 && iter % opts.log_every == 0 {
            log.push(IterateLog { iter, objective: linear(cost, &z), primal_res: primal, dual_res: dual });
        }
        if primal <= opts.tol_res && dual <= opts.tol_res {
            converged = true;
            break;
        }
    }

    let values = project_affine(&z, trace).map(|v| v.max(0.0));
    ClusteringMatrix {
        values,
        objective: f64::NAN,
        primal_res: primal,
        dual_res: dual,
        iterations,
        converged,
        log,
    }
}
