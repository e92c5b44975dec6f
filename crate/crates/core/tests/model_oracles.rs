//! Generator checks against independent oracles: inverse normal by bisection,
//! closed-form separations, and direct counting against latent draws.

use std::collections::HashSet;

use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use compclust::model::{
    delta_of_distributions, generate_partition, params_for_delta, quadruplet_universe, sample_quadruplets,
    sample_similarities, sample_triplets, triplet_universe, DistributionFamily, DistributionSpec, LatentSimilarities,
    Sampling,
};
use compclust::similarity::build_adds3;
use compclust::Partition;

/// `Φ(x)` through the complementary error function.
fn phi_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn normal_normal_mean_matches_inverse_normal_oracle() {
    let z = bisect(|x| phi_cdf(x) - 0.75, -10.0, 10.0);
    // tabulated upper quartile of the standard normal
    assert!((z - 0.674_489_750_196_081_7).abs() < 1e-13);
    let (f_in, f_out) = params_for_delta(DistributionFamily::NormalNormal { sigma: 0.1 }, 0.5).unwrap();
    let DistributionSpec::Normal { mean, stddev } = f_in else { panic!("expected a normal") };
    assert_eq!(stddev, 0.1);
    assert_eq!(f_out, DistributionSpec::Normal { mean: 0.0, stddev: 0.1 });
    assert!((mean - std::f64::consts::SQRT_2 * 0.1 * z).abs() < 1e-12);
    assert!((mean - 0.095387).abs() < 5e-7);
    assert!((delta_of_distributions(&f_in, &f_out).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn beta_uniform_alpha() {
    let (f_in, f_out) = params_for_delta(DistributionFamily::BetaUniform { beta: 2.0 }, 0.5).unwrap();
    assert_eq!(f_in, DistributionSpec::Beta { alpha: 6.0, beta: 2.0 });
    assert_eq!(f_out, DistributionSpec::Uniform01);
    assert!((delta_of_distributions(&f_in, &f_out).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn identical_specs_have_zero_separation() {
    for spec in [
        DistributionSpec::Uniform01,
        DistributionSpec::Normal { mean: 0.3, stddev: 2.0 },
        DistributionSpec::Beta { alpha: 3.0, beta: 5.0 },
    ] {
        assert!(delta_of_distributions(&spec, &spec).unwrap().abs() < 1e-9);
    }
}

/// `1 + φ(−μ) − φ(1−μ) + (μ−1)Φ(1−μ) − μΦ(−μ)`, i.e. `P(N(μ,1) > U)`.
fn normal_above_uniform_oracle(mu: f64) -> f64 {
    let std = Normal::new(0.0, 1.0).unwrap();
    1.0 + std.pdf(-mu) - std.pdf(1.0 - mu) + (mu - 1.0) * std.cdf(1.0 - mu) - mu * std.cdf(-mu)
}

#[test]
fn normal_uniform_mean_solves_residual_equation() {
    let delta = 0.5;
    let target = 0.5 * (1.0 + delta);
    let oracle = bisect(|mu| normal_above_uniform_oracle(mu) - target, -20.0, 20.0);
    let (f_in, _) = params_for_delta(DistributionFamily::NormalUniform, delta).unwrap();
    let DistributionSpec::Normal { mean, stddev } = f_in else { panic!("expected a normal") };
    assert_eq!(stddev, 1.0);
    assert!((normal_above_uniform_oracle(mean) - target).abs() < 1e-6);
    assert!((mean - oracle).abs() < 1e-6);

    // The closed form μ = (1+δ)/2 = 0.75 does not satisfy the equation: it
    // gives P(N(0.75,1) > U) ≈ 0.595, so the two disagree by a wide margin.
    let at_claim = normal_above_uniform_oracle(0.75);
    assert!((at_claim - 0.5948).abs() < 1e-3, "{at_claim}");
    assert!((mean - 0.75).abs() > 0.3, "solved mean {mean}");
}

#[test]
fn separation_round_trips_through_every_family() {
    for delta in [0.1, 0.25, 0.5, 0.8, 0.95] {
        for family in [
            DistributionFamily::NormalNormal { sigma: 0.1 },
            DistributionFamily::NormalNormal { sigma: 3.0 },
            DistributionFamily::BetaUniform { beta: 2.0 },
            DistributionFamily::NormalUniform,
        ] {
            let (f_in, f_out) = params_for_delta(family, delta).unwrap();
            let got = delta_of_distributions(&f_in, &f_out).unwrap();
            assert!((got - delta).abs() < 1e-6, "{family:?} δ={delta}: {got}");
        }
    }
    assert!(params_for_delta(DistributionFamily::NormalNormal { sigma: 0.1 }, 1.0).is_err());
    assert!(params_for_delta(DistributionFamily::NormalUniform, 0.0).is_err());
}

#[test]
fn partition_examples() {
    let p = generate_partition(3, &[1, 2], 7).unwrap();
    assert_eq!(p.cluster_sizes(), &[1, 2]);
    assert!(generate_partition(4, &[3, 2], 0).is_err());
}

#[test]
fn single_cluster_uniform_draws_average_one_half() {
    let n = 200;
    let p = Partition::new(vec![0; n], 1).unwrap();
    let w = sample_similarities(&p, &DistributionSpec::Uniform01, &DistributionSpec::Uniform01, 3).unwrap();
    let pairs = (n * (n - 1) / 2) as f64;
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += w.get(i, j);
        }
    }
    assert!((sum / pairs - 0.5).abs() <= 4.0 / pairs.sqrt());
}

#[test]
fn within_beats_cross_at_the_separation_rate() {
    let n = 200;
    let p = generate_partition(n, &[100, 100], 11).unwrap();
    for delta in [0.5, 0.99] {
        let (f_in, f_out) = params_for_delta(DistributionFamily::NormalNormal { sigma: 0.1 }, delta).unwrap();
        let w = sample_similarities(&p, &f_in, &f_out, 11).unwrap();
        let (mut inside, mut cross) = (Vec::new(), Vec::new());
        for i in 0..n {
            for j in (i + 1)..n {
                if p.label(i) == p.label(j) {
                    inside.push(w.get(i, j));
                } else {
                    cross.push(w.get(i, j));
                }
            }
        }
        // pair draws one-to-one so every comparison is independent
        let m = inside.len().min(cross.len());
        let wins = inside.iter().zip(&cross).filter(|(a, b)| a > b).count();
        let freq = wins as f64 / m as f64;
        let expect = 0.5 * (1.0 + delta);
        let se = (expect * (1.0 - expect) / m as f64).sqrt().max(1.0 / m as f64);
        assert!((freq - expect).abs() <= 4.0 * se, "δ={delta}: {freq} vs {expect}");
    }
}

#[test]
fn latent_draws_are_deterministic() {
    let p = generate_partition(50, &[25, 25], 5).unwrap();
    let (f_in, f_out) = params_for_delta(DistributionFamily::BetaUniform { beta: 2.0 }, 0.5).unwrap();
    let a = sample_similarities(&p, &f_in, &f_out, 9).unwrap();
    let b = sample_similarities(&p, &f_in, &f_out, 9).unwrap();
    assert_eq!(a, b);
}

fn two_pairs() -> (Partition, LatentSimilarities) {
    let p = Partition::from_labels(&[0, 0, 1, 1]);
    let w = LatentSimilarities::from_fn(4, |i, j| if p.label(i) == p.label(j) { 1.0 } else { 0.0 });
    (p, w)
}

#[test]
fn full_triplet_universe_without_noise() {
    let (_, w) = two_pairs();
    let t = sample_triplets(&w, Sampling::Rate(1.0), 1.0, 0).unwrap();
    assert_eq!(t.len(), 12);
    assert_eq!(triplet_universe(4), 12);
    assert!(t.iter().all(|r| w.get(r.i, r.j) >= w.get(r.i, r.r)));
    let distinct: HashSet<_> = t.iter().map(|r| (r.i, r.j.min(r.r), r.j.max(r.r))).collect();
    assert_eq!(distinct.len(), 12);
}

#[test]
fn full_quadruplet_universe_and_empty_count() {
    let (_, w) = two_pairs();
    assert_eq!(sample_quadruplets(&w, Sampling::Rate(1.0), 1.0, 0).unwrap().len(), 15);
    assert_eq!(quadruplet_universe(4), 15);
    assert!(sample_quadruplets(&w, Sampling::Count(0), 0.5, 0).unwrap().is_empty());
}

#[test]
fn count_sampling_is_without_replacement() {
    let p = generate_partition(100, &[50, 50], 1).unwrap();
    let (f_in, f_out) = params_for_delta(DistributionFamily::NormalNormal { sigma: 0.1 }, 0.5).unwrap();
    let w = sample_similarities(&p, &f_in, &f_out, 1).unwrap();
    let t = sample_triplets(&w, Sampling::Count(5000), 0.3, 1).unwrap();
    assert_eq!(t.len(), 5000);
    let distinct: HashSet<_> = t.iter().map(|r| (r.i, r.j.min(r.r), r.j.max(r.r))).collect();
    assert_eq!(distinct.len(), 5000);
    let q = sample_quadruplets(&w, Sampling::Count(5000), 0.3, 1).unwrap();
    let distinct: HashSet<_> = q
        .iter()
        .map(|r| {
            let (a, b) = ((r.i, r.j), (r.r, r.s));
            (a.min(b), a.max(b))
        })
        .collect();
    assert_eq!(distinct.len(), 5000);
}

fn flip_tolerance(epsilon: f64, m: usize) -> f64 {
    4.0 * ((1.0 - epsilon * epsilon) / 4.0 / m as f64).sqrt()
}

#[test]
fn triplet_flip_rate_matches_noise_level() {
    let n = 200;
    let p = generate_partition(n, &[50, 50, 50, 50], 2).unwrap();
    let (f_in, f_out) = params_for_delta(DistributionFamily::NormalNormal { sigma: 0.1 }, 0.5).unwrap();
    let w = sample_similarities(&p, &f_in, &f_out, 2).unwrap();
    for epsilon in [0.3, 0.75] {
        let t = sample_triplets(&w, Sampling::Rate(0.01), epsilon, 2).unwrap();
        let flips = t.iter().filter(|r| w.get(r.i, r.j) < w.get(r.i, r.r)).count();
        let rate = flips as f64 / t.len() as f64;
        let expect = 0.5 * (1.0 - epsilon);
        assert!((rate - expect).abs() <= flip_tolerance(epsilon, t.len()), "ε={epsilon}: {rate}");
    }
}

#[test]
fn quadruplet_flip_rate_matches_noise_level() {
    let n = 100;
    let p = generate_partition(n, &[50, 50], 4).unwrap();
    let (f_in, f_out) = params_for_delta(DistributionFamily::NormalNormal { sigma: 0.1 }, 0.5).unwrap();
    let w = sample_similarities(&p, &f_in, &f_out, 4).unwrap();
    let q = sample_quadruplets(&w, Sampling::Rate(0.002), 0.75, 4).unwrap();
    let flips = q.iter().filter(|r| w.get(r.i, r.j) < w.get(r.r, r.s)).count();
    let rate = flips as f64 / q.len() as f64;
    assert!((rate - 0.125).abs() <= flip_tolerance(0.75, q.len()), "{rate}");
}

#[test]
fn adds3_on_full_noiseless_universe_hits_expectation() {
    let (p, w) = two_pairs();
    let t = sample_triplets(&w, Sampling::Rate(1.0), 1.0, 0).unwrap();
    let s = build_adds3(t, 4).unwrap();
    // 2·p·ε·δ·(n − n_ℓ) with p = ε = δ = 1
    let expected = 2.0 * (4 - p.cluster_sizes()[0]) as f64;
    assert_eq!(s.get(0, 1), expected);
    assert_eq!(s.get(2, 3), expected);
    assert_eq!(s.get(0, 1), 4.0);
}
