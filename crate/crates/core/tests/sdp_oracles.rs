//! Solver, certificate and SPUR behaviour on ideal and planted inputs.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use compclust::model::{
    generate_partition, params_for_delta, sample_similarities, sample_triplets, triplet_universe, DistributionFamily,
    Sampling,
};
use compclust::sdp::linalg::eigh;
use compclust::sdp::{
    adds3_ideal_sigma, adds4_ideal_sigma, certificate, ideal_clustering_matrix, ideal_similarity, kkt_residuals,
    solve_sdp_k, solve_sdp_lambda, FeasibilityReport, IdealModel, SolverOptions,
};
use compclust::selection::{comparison_spur, spur_grid, spur_objective, SpurOptions};
use compclust::similarity::build_adds3;
use compclust::Partition;

fn two_by_two() -> (Partition, IdealModel, DMatrix<f64>) {
    let p = Partition::from_labels(&[0, 0, 1, 1]);
    let model = IdealModel::new(p.clone(), DMatrix::identity(2, 2)).unwrap();
    let s = model.block_matrix();
    (p, model, s)
}

fn fro(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm()
}

fn random_partition(rng: &mut ChaCha8Rng, n: usize, max_k: usize) -> Partition {
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..max_k)).collect();
    Partition::from_labels(&labels)
}

/// Convex mixture of ideal matrices of random partitions; always feasible.
fn random_feasible(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let parts = rng.random_range(1..4);
    let weights: Vec<f64> = (0..parts).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    let mut x = DMatrix::zeros(n, n);
    for w in weights {
        let k = rng.random_range(1..=n.min(6));
        x += ideal_clustering_matrix(&random_partition(rng, n, k)).values * (w / total);
    }
    x
}

fn tight() -> SolverOptions {
    SolverOptions { tol_res: 1e-8, tol_feas: 1e-8, ..Default::default() }
}

#[test]
fn ideal_matrix_examples() {
    let x = ideal_clustering_matrix(&Partition::from_labels(&[0, 0, 1, 1])).values;
    let want = DMatrix::from_fn(4, 4, |i, j| if i / 2 == j / 2 { 0.5 } else { 0.0 });
    assert_eq!(x, want);
    assert_eq!(x.trace(), 2.0);
    assert_eq!(ideal_clustering_matrix(&Partition::from_labels(&[0, 1, 2])).values, DMatrix::identity(3, 3));

    let p = Partition::from_labels(&[2, 0, 1, 1, 0, 2, 2, 3]);
    let (mut values, _) = eigh(&ideal_clustering_matrix(&p).values);
    values.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    for (i, v) in values.iter().enumerate() {
        let want = if i < p.k() { 1.0 } else { 0.0 };
        assert!((v - want).abs() < 1e-12, "{values}");
    }
}

#[test]
fn ideal_similarity_examples() {
    let (_, model, s) = two_by_two();
    let want = DMatrix::from_fn(4, 4, |i, j| if i / 2 == j / 2 { 1.0 } else { 0.0 });
    assert_eq!(s, want);
    assert_eq!(ideal_similarity(&model).values(), &want);
    let flat = IdealModel::new(Partition::from_labels(&[0, 1, 1, 2]), DMatrix::from_element(3, 3, 2.5)).unwrap();
    assert_eq!(flat.block_matrix(), DMatrix::from_element(4, 4, 2.5));
}

#[test]
fn planted_block_gaps() {
    let sizes = [30, 20, 25];
    let (p, eps, del) = (0.3, 0.75, 0.5);
    let n = 75.0;
    let scale = p * eps * del;
    let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &m)| std::iter::repeat_n(c, m)).collect();
    let part = Partition::from_labels(&labels);

    let s4 = adds4_ideal_sigma(p, eps, del, &sizes).unwrap();
    let within: f64 = sizes.iter().map(|&m| (m * (75 - m)) as f64 / 2.0).sum();
    let across: f64 = sizes.iter().map(|&m| (m * (m - 1)) as f64 / 2.0).sum();
    assert!((s4[(1, 1)] - scale * within).abs() < 1e-9);
    assert!((s4[(0, 2)] + scale * across).abs() < 1e-9);
    let d1 = IdealModel::new(part.clone(), s4).unwrap().delta1();
    assert!((d1 - scale * n * (n - 1.0) / 2.0).abs() < 1e-9, "{d1}");

    // For AddS-3 the within-minus-cross gap works out to 2pεδ(n−1).
    let s3 = adds3_ideal_sigma(p, eps, del, &sizes).unwrap();
    let d1 = IdealModel::new(part, s3).unwrap().delta1();
    assert!((d1 - 2.0 * scale * (n - 1.0)).abs() < 1e-9, "{d1}");
}

#[test]
fn sdp_lambda_recovers_small_ideal() {
    let (p, _, s) = two_by_two();
    let x = solve_sdp_lambda(&s, 0.5, &SolverOptions::default()).unwrap();
    assert!(fro(&x.values, &ideal_clustering_matrix(&p).values) <= 1e-4);
    assert!(x.feasibility().is_feasible(1e-6, None));
}

#[test]
fn zero_similarity_gives_flat_matrix() {
    let n = 7;
    let flat = DMatrix::from_element(n, n, 1.0 / n as f64);
    let fr = FeasibilityReport::of(&flat);
    assert!(fr.is_feasible(1e-12, Some(1.0)));
    // any feasible X has 1 as an eigenvector with eigenvalue 1, so tr X ≥ 1
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let x = random_feasible(&mut rng, n);
        assert!(FeasibilityReport::of(&x).is_feasible(1e-9, None));
        assert!(x.trace() >= 1.0 - 1e-9);
    }
    for lambda in [0.1, 1.0, 5.0] {
        let x = solve_sdp_lambda(&DMatrix::zeros(n, n), lambda, &SolverOptions::default()).unwrap();
        assert!(fro(&x.values, &flat) <= 1e-4, "λ={lambda}");
    }
}

#[test]
fn sdp_k_examples() {
    let (p, _, s) = two_by_two();
    let x = solve_sdp_k(&s, 2, &SolverOptions::default()).unwrap();
    assert!(fro(&x.values, &ideal_clustering_matrix(&p).values) <= 1e-4);
    assert!((x.trace() - 2.0).abs() <= 1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 12;
    let mut s = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    s = (&s + s.transpose()) * 0.5;
    s.fill_diagonal(0.0);
    let x = solve_sdp_k(&s, n, &SolverOptions::default()).unwrap();
    assert!(x.objective >= -1e-6 * s.norm());
    for k in 1..=n {
        let x = solve_sdp_k(&s, k, &SolverOptions::default()).unwrap();
        assert!((x.trace() - k as f64).abs() <= 1e-6, "k={k}: {}", x.trace());
        assert!(x.feasibility().is_feasible(1e-6, Some(k as f64)));
    }
    assert!(solve_sdp_k(&s, 0, &SolverOptions::default()).is_err());
    assert!(solve_sdp_k(&s, n + 1, &SolverOptions::default()).is_err());
}

#[test]
fn asymmetric_input_is_rejected() {
    let mut s = DMatrix::zeros(3, 3);
    s[(0, 1)] = 1.0;
    assert!(solve_sdp_lambda(&s, 1.0, &SolverOptions::default()).is_err());
    assert!(solve_sdp_lambda(&DMatrix::zeros(3, 3), f64::NAN, &SolverOptions::default()).is_err());
}

#[test]
fn iteration_cap_is_a_flag_not_an_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 20;
    let mut s = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    s = (&s + s.transpose()) * 0.5;
    let x = solve_sdp_lambda(&s, 0.3, &SolverOptions { max_iters: 3, ..Default::default() }).unwrap();
    assert!(!x.converged);
    assert_eq!(x.iterations, 3);
    assert!(x.primal_res.is_finite() && x.dual_res.is_finite());
}

#[test]
fn ideal_recovery_over_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..12 {
        let n = rng.random_range(6..30);
        let max_k = rng.random_range(2..5);
        let p = random_partition(&mut rng, n, max_k);
        if p.k() < 2 {
            continue;
        }
        let k = p.k();
        let off = rng.random_range(-1.0..1.0);
        let mut sigma = DMatrix::from_element(k, k, off);
        for a in 0..k {
            for b in a + 1..k {
                let v = off + rng.random_range(-0.3..0.3);
                sigma[(a, b)] = v;
                sigma[(b, a)] = v;
            }
            sigma[(a, a)] = off + 1.0 + rng.random_range(0.0..2.0);
        }
        let model = IdealModel::new(p.clone(), sigma).unwrap();
        let d1 = model.delta1();
        assert!(d1 > 0.0);
        let s = model.block_matrix();
        let hi = p.min_cluster_size() as f64 * d1;
        let lambda = rng.random_range(0.1 * hi..0.9 * hi);
        let x = solve_sdp_lambda(&s, lambda, &tight()).unwrap();
        let err = fro(&x.values, &ideal_clustering_matrix(&p).values);
        assert!(err <= 1e-4, "case {case}: n={n} k={k} λ={lambda}: {err}");
    }
}

#[test]
fn objective_dominates_random_feasible_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 15;
    let truth = random_partition(&mut rng, n, 3);
    let mut s = DMatrix::from_fn(n, n, |i, j| {
        let base = if truth.label(i) == truth.label(j) { 1.0 } else { -0.5 };
        base + rng.random_range(-0.8..0.8)
    });
    s = (&s + s.transpose()) * 0.5;
    s.fill_diagonal(0.0);
    let lambda = 1.5;
    let x = solve_sdp_lambda(&s, lambda, &SolverOptions::default()).unwrap();
    let value = |x: &DMatrix<f64>| s.component_mul(x).sum() - lambda * x.trace();
    let slack = 1e-5 * s.norm();
    for _ in 0..100 {
        let other = random_feasible(&mut rng, n);
        assert!(value(&x.values) >= value(&other) - slack);
    }
}

#[test]
fn certificate_of_unperturbed_identity_blocks() {
    let (_, model, s) = two_by_two();
    let c = certificate(&s, &model).unwrap();
    assert_eq!((c.delta1, c.delta2), (1.0, 0.0));
    assert!(c.spectral_gap.abs() < 1e-12);
    assert!(c.lambda_lo.abs() < 1e-12);
    assert!((c.lambda_hi - 1.0).abs() < 1e-12);
    assert!(c.nonempty);
    assert!(certificate(&DMatrix::zeros(3, 3), &model).is_err());
}

#[test]
fn kkt_holds_at_ideal_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let n = rng.random_range(4..25);
        let max_k = rng.random_range(2..5);
        let p = random_partition(&mut rng, n, max_k);
        if p.k() < 2 {
            continue;
        }
        let k = p.k();
        let mut sigma = DMatrix::from_fn(k, k, |_, _| 0.0);
        for a in 0..k {
            for b in a..k {
                let v = if a == b { 2.0 + rng.random::<f64>() } else { rng.random_range(-0.5..0.5) };
                sigma[(a, b)] = v;
                sigma[(b, a)] = v;
            }
        }
        let model = IdealModel::new(p.clone(), sigma).unwrap();
        let s = model.block_matrix();
        let lambda = rng.random_range(0.05..0.95) * p.min_cluster_size() as f64 * model.delta1();
        let x = ideal_clustering_matrix(&p).values;
        let r = kkt_residuals(&s, lambda, &x).unwrap();
        assert!(r.block_structured);
        assert!(r.max_residual() <= 1e-8, "{r:?}");
    }
}

#[test]
fn kkt_flags_non_optimal_points() {
    let (_, _, s) = two_by_two();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let x = random_feasible(&mut rng, 4);
        if fro(&x, &ideal_clustering_matrix(&Partition::from_labels(&[0, 0, 1, 1])).values) < 1e-6 {
            continue;
        }
        let r = kkt_residuals(&s, 0.5, &x).unwrap();
        // ideal matrices of the wrong clusters pass complementarity but break
        // dual feasibility, so check the worst residual
        assert!(r.max_residual() > 1e-8, "{r:?}");
        assert_eq!(r.feasibility, FeasibilityReport::of(&x));
    }
}

#[test]
fn planted_certificate_implies_recovery() {
    let n = 100;
    let truth = generate_partition(n, &[50, 50], 6).unwrap();
    let delta = 0.9;
    let (f_in, f_out) = params_for_delta(DistributionFamily::NormalNormal { sigma: 0.1 }, delta).unwrap();
    let w = sample_similarities(&truth, &f_in, &f_out, 6).unwrap();
    let t = sample_triplets(&w, Sampling::Rate(1.0), 1.0, 6).unwrap();
    assert_eq!(t.len() as u64, triplet_universe(n));
    let s = build_adds3(t, n).unwrap().into_values();
    let sigma = adds3_ideal_sigma(1.0, 1.0, delta, truth.cluster_sizes()).unwrap();
    let model = IdealModel::new(truth.clone(), sigma).unwrap();
    let c = certificate(&s, &model).unwrap();
    assert!(c.nonempty, "{c:?}");
    let star = ideal_clustering_matrix(&truth).values;
    for frac in [0.25, 0.5, 0.75] {
        let lambda = c.lambda_lo + frac * (c.lambda_hi - c.lambda_lo);
        assert!(c.contains(lambda));
        let x = solve_sdp_lambda(&s, lambda, &tight()).unwrap();
        assert!(fro(&x.values, &star) <= 1e-3, "λ={lambda}");
    }
}

#[test]
fn eigendecomposition_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for n in [1, 2, 7, 60, 300, 500] {
        let mut m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        m = (&m + m.transpose()) * 0.5;
        let (values, vectors) = eigh(&m);
        let rebuilt = &vectors * DMatrix::from_diagonal(&values) * vectors.transpose();
        assert!(fro(&m, &rebuilt) <= 1e-10 * m.norm(), "n={n}");
    }
}

#[test]
fn spur_grid_on_ideal_blocks() {
    let p = Partition::from_labels(&[0, 0, 0, 0, 1, 1, 1, 1, 1]);
    let model = IdealModel::new(p.clone(), DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.5])).unwrap();
    let s = model.block_matrix();
    let lambda_max = p.min_cluster_size() as f64 * model.delta1();
    let r = spur_grid(&s, lambda_max, 8, &SolverOptions::default()).unwrap();
    assert_eq!(r.k_hat, 2);
    assert_eq!(r.candidates.len(), 8);
    assert!((spur_objective(&r.x.values, 2).unwrap() - r.objective).abs() < 1e-12);
    let one = spur_grid(&s, lambda_max, 1, &SolverOptions::default()).unwrap();
    assert_eq!(one.candidates.len(), 1);
    assert!(spur_grid(&s, 0.0, 4, &SolverOptions::default()).is_err());
}

#[test]
fn comparison_spur_on_planted_magnitudes() {
    let n = 40;
    let truth = generate_partition(n, &[20, 20], 0).unwrap();
    let c = (n as f64 * (n as f64).ln().powi(3)).ceil() as u64;
    let p = c as f64 / triplet_universe(n) as f64;
    let sigma = adds3_ideal_sigma(p, 0.75, 0.5, truth.cluster_sizes()).unwrap();
    let mut s = IdealModel::new(truth, sigma).unwrap().block_matrix();
    s.fill_diagonal(0.0);
    let r = comparison_spur(&s, c, &SpurOptions::default()).unwrap();
    assert_eq!(r.k_hat, 2);
    // the two bracketing SDP-λ solves come first
    assert!(r.candidates[0].lambda.is_some() && r.candidates[1].lambda.is_some());
    assert!(r.candidates[0].k <= r.candidates[1].k);
}
