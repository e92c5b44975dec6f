//! Choosing the number of clusters with the SPUR criterion.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sdp::linalg::eigenvalues_desc;
use crate::sdp::{solve_sdp_k_from, solve_sdp_lambda, AdmmState, ClusteringMatrix, SolverOptions};

/// Traces at or below this are treated as a failed solve.
const MIN_TRACE: f64 = 1e-9;

/// Objectives closer than this count as tied; the earlier candidate wins.
pub const TIE_TOLERANCE: f64 = 1e-6;

/// Integer approximation of `tr X`, rounding halves up.
pub fn estimate_k_from_trace(x: &ClusteringMatrix) -> usize {
    (x.trace() + 0.5).floor().max(0.0) as usize
}

/// Share of the trace carried by the `k` largest eigenvalues of `x`.
pub fn spur_objective(x: &DMatrix<f64>, k: usize) -> Result<f64> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in 1..={n}, got {k}")));
    }
    let trace = x.trace();
    if !(trace > MIN_TRACE) {
        return Err(Error::Degenerate(format!("clustering matrix has trace {trace}")));
    }
    Ok(eigenvalues_desc(x).iter().take(k).sum::<f64>() / trace)
}

/// Which logarithm enters `λ_min = √(c·ln(·)/n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LambdaMinRule {
    /// `√(c ln n / n)`
    #[default]
    LnN,
    /// `√(c ln c / n)`
    LnC,
}

/// Cheap first pass over the SDP-k candidates of [`comparison_spur`].
///
/// Every candidate is solved to `tol`; only those whose objective lands within
/// `margin` of the best are solved again at the full solver tolerance, and the
/// choice is made among those.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Screening {
    pub tol: f64,
    pub margin: f64,
}

impl Default for Screening {
    fn default() -> Self {
        Self { tol: 1e-4, margin: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpurOptions {
    pub solver: SolverOptions,
    pub lambda_min_rule: LambdaMinRule,
    /// `None` solves every candidate at full tolerance.
    pub screening: Option<Screening>,
}

impl Default for SpurOptions {
    fn default() -> Self {
        Self { solver: SolverOptions::default(), lambda_min_rule: LambdaMinRule::default(), screening: Some(Screening::default()) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpurCandidate {
    pub k: usize,
    /// Set for SDP-λ candidates.
    pub lambda: Option<f64>,
    /// `NaN` when the solve was degenerate.
    pub objective: f64,
    pub trace: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Residual tolerance of the solve the other fields come from.
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct SpurResult {
    pub k_hat: usize,
    pub x: ClusteringMatrix,
    pub objective: f64,
    pub candidates: Vec<SpurCandidate>,
}

impl SpurResult {
    /// Writes the candidate table as `k,objective,trace,converged,tol`.
    pub fn write_candidates<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,objective,trace,converged,tol")?;
        for c in &self.candidates {
            writeln!(out, "{},{},{},{},{:e}", c.k, c.objective, c.trace, c.converged, c.tol)?;
        }
        Ok(())
    }
}

/// The `t`-th of `T` points on the log-spaced grid `exp((t/T)·ln(1 + λ_max)) − 1`.
pub fn grid_lambda(t: usize, grid: usize, lambda_max: f64) -> f64 {
    ((t as f64 / grid as f64) * lambda_max.ln_1p()).exp_m1()
}

/// Picks the candidate with the largest objective, earliest on ties (within
/// [`TIE_TOLERANCE`], so `k = n`, whose objective is always 1, cannot beat an
/// exact block solution by rounding noise).
fn select(solved: Vec<(SpurCandidate, ClusteringMatrix)>) -> Result<SpurResult> {
    let mut best: Option<usize> = None;
    for (i, (c, _)) in solved.iter().enumerate() {
        if c.objective.is_nan() {
            continue;
        }
        if best.is_none_or(|b| c.objective > solved[b].0.objective + TIE_TOLERANCE) {
            best = Some(i);
        }
    }
    let best = best.ok_or_else(|| Error::Degenerate("every SPUR candidate solve was degenerate".into()))?;
    let candidates: Vec<SpurCandidate> = solved.iter().map(|(c, _)| *c).collect();
    let (chosen, x) = solved.into_iter().nth(best).expect("index in range");
    Ok(SpurResult { k_hat: chosen.k, x, objective: chosen.objective, candidates })
}

/// SPUR over SDP-λ on the grid `λ_1 < … < λ_T = λ_max`.
pub fn spur_grid(s: &DMatrix<f64>, lambda_max: f64, grid: usize, opts: &SolverOptions) -> Result<SpurResult> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda_max must be positive, got {lambda_max}")));
    }
    if grid == 0 {
        return Err(Error::InvalidParameter("grid size must be at least 1".into()));
    }
    let mut solved = Vec::with_capacity(grid);
    for t in 1..=grid {
        let lambda = grid_lambda(t, grid, lambda_max);
        let x = solve_sdp_lambda(s, lambda, opts)?;
        let k = estimate_k_from_trace(&x).clamp(1, s.nrows());
        let objective = spur_objective(&x.values, k).unwrap_or(f64::NAN);
        solved.push((candidate(k, Some(lambda), objective, &x, opts.tol_res), x));
    }
    select(solved)
}

/// Bounds `(λ_min, λ_max)` used by [`comparison_spur`] for `c` comparisons on `n` items.
pub fn comparison_lambda_bounds(n: usize, c: u64, rule: LambdaMinRule) -> (f64, f64) {
    let (nf, cf) = (n as f64, c as f64);
    let log = match rule {
        LambdaMinRule::LnN => nf.ln(),
        LambdaMinRule::LnC => cf.ln(),
    };
    ((cf * log / nf).max(0.0).sqrt(), cf / nf)
}

/// Candidate cluster counts `max{2, k_λmax} ..= k_λmin + 2`, clamped to `1..n`
/// (`1..=n` when `n <= 2`), falling back to `{2, 3}` when the clamped range is
/// empty. `k = n` is left out because SDP-k then admits only the identity,
/// whose objective is 1 whatever the data.
pub fn candidate_range(k_lambda_min: usize, k_lambda_max: usize, n: usize) -> Vec<usize> {
    let cap = if n > 2 { n - 1 } else { n };
    let lo = k_lambda_max.max(2);
    let hi = (k_lambda_min + 2).min(cap);
    if lo <= hi {
        return (lo..=hi).collect();
    }
    let fallback: Vec<usize> = [2, 3].into_iter().filter(|&k| k <= cap).collect();
    if fallback.is_empty() {
        vec![1]
    } else {
        fallback
    }
}

/// Comparison-based SPUR: bracket `k` with SDP-λ at `λ_max` and `λ_min`,
/// then score SDP-k for every `k` in the bracket, screened first when
/// [`SpurOptions::screening`] is set.
///
/// The two SDP-λ solves are reported first in `candidates`, followed by one
/// row per `k` (screening values for the ones that were not solved again).
pub fn comparison_spur(s: &DMatrix<f64>, comparisons: u64, opts: &SpurOptions) -> Result<SpurResult> {
    let n = s.nrows();
    if comparisons == 0 {
        return Err(Error::InvalidParameter("comparison-based SPUR needs at least one comparison".into()));
    }
    let (lambda_min, lambda_max) = comparison_lambda_bounds(n, comparisons, opts.lambda_min_rule);
    let mut bracket = Vec::with_capacity(2);
    for lambda in [lambda_max, lambda_min] {
        let x = solve_sdp_lambda(s, lambda, &opts.solver)?;
        let k = estimate_k_from_trace(&x);
        let objective = spur_objective(&x.values, k.clamp(1, n)).unwrap_or(f64::NAN);
        bracket.push(candidate(k, Some(lambda), objective, &x, opts.solver.tol_res));
    }
    let (k_max_lambda, k_min_lambda) = (bracket[0].k, bracket[1].k);
    let range = candidate_range(k_min_lambda, k_max_lambda, n);

    let full = |k: usize, start: Option<AdmmState>| -> Result<(SpurCandidate, ClusteringMatrix)> {
        let (x, _) = solve_sdp_k_from(s, k, &opts.solver, start)?;
        let objective = spur_objective(&x.values, k).unwrap_or(f64::NAN);
        Ok((candidate(k, None, objective, &x, opts.solver.tol_res), x))
    };
    if let Some(sc) = opts.screening {
        if !(sc.tol > 0.0 && sc.tol.is_finite() && sc.margin >= 0.0 && sc.margin.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad screening tol {} / margin {}", sc.tol, sc.margin)));
        }
    }
    let screening = opts.screening.filter(|sc| range.len() > 1 && sc.tol > opts.solver.tol_res);
    let Some(screening) = screening else {
        let solved = range.into_iter().map(|k| full(k, None)).collect::<Result<Vec<_>>>()?;
        let mut result = select(solved)?;
        bracket.extend(result.candidates);
        result.candidates = bracket;
        return Ok(result);
    };

    let coarse_opts = SolverOptions { tol_res: screening.tol, tol_feas: screening.tol.max(opts.solver.tol_feas), ..opts.solver.clone() };
    let mut table = Vec::with_capacity(range.len());
    let mut states = Vec::with_capacity(range.len());
    for &k in &range {
        let (x, state) = solve_sdp_k_from(s, k, &coarse_opts, None)?;
        let objective = spur_objective(&x.values, k).unwrap_or(f64::NAN);
        table.push(candidate(k, None, objective, &x, screening.tol));
        states.push(state);
    }
    let best = table.iter().map(|c| c.objective).filter(|o| !o.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(Error::Degenerate("every SPUR candidate solve was degenerate".into()));
    }
    let mut refined = Vec::new();
    for (c, state) in table.iter_mut().zip(states) {
        if c.objective >= best - screening.margin {
            // resume from the screening run rather than starting over
            let (again, x) = full(c.k, state)?;
            *c = again;
            refined.push((again, x));
        }
    }
    let mut result = select(refined)?;
    bracket.extend(table);
    result.candidates = bracket;
    Ok(result)
}

fn candidate(k: usize, lambda: Option<f64>, objective: f64, x: &ClusteringMatrix, tol: f64) -> SpurCandidate {
    SpurCandidate { k, lambda, objective, trace: x.trace(), converged: x.converged, iterations: x.iterations, tol }
}
