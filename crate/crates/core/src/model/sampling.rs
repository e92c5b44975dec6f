//! Passive sampling of noisy triplet and quadruplet answers.
//!
//! A query is one pivot with an unordered pair of other items (triplets), or an
//! unordered pair of distinct unordered item pairs (quadruplets). Queries are
//! indexed densely so that sampling without replacement is sampling distinct
//! integers; each observed query is answered from the latent similarities and
//! flipped with probability `(1 − ε)/2`.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::planted::{check_epsilon, check_rate, LatentSimilarities, Sampling};
use crate::comparison::{QuadrupletRecord, TripletRecord};
use crate::error::{Error, Result};
use crate::rng::{stage_rng, Stage};

#[inline]
pub fn choose2(m: u64) -> u64 {
    m * m.saturating_sub(1) / 2
}

/// Colexicographic rank of `a < b`.
#[inline]
pub fn pair_rank(a: u64, b: u64) -> u64 {
    debug_assert!(a < b);
    choose2(b) + a
}

/// Inverse of [`pair_rank`].
#[inline]
pub fn pair_unrank(t: u64) -> (u64, u64) {
    let mut b = ((1.0 + (1.0 + 8.0 * t as f64).sqrt()) / 2.0) as u64;
    while choose2(b) > t {
        b -= 1;
    }
    while choose2(b + 1) <= t {
        b += 1;
    }
    (t - choose2(b), b)
}

/// Number of distinct triplet queries on `n` items: `n·C(n−1, 2)`.
pub fn triplet_universe(n: usize) -> u64 {
    n as u64 * choose2(n.saturating_sub(1) as u64)
}

/// Number of distinct quadruplet queries on `n` items: `C(C(n, 2), 2)`.
pub fn quadruplet_universe(n: usize) -> u64 {
    choose2(choose2(n as u64))
}

/// Decodes a triplet query into `(pivot, j, r)` with `j < r`.
pub fn triplet_query(n: usize, q: u64) -> (usize, usize, usize) {
    let per_pivot = choose2(n as u64 - 1);
    let i = q / per_pivot;
    let (a, b) = pair_unrank(q % per_pivot);
    let j = a + u64::from(a >= i);
    let r = b + u64::from(b >= i);
    (i as usize, j as usize, r as usize)
}

/// Decodes a quadruplet query into two canonical pairs.
pub fn quadruplet_query(q: u64) -> ((usize, usize), (usize, usize)) {
    let (x, y) = pair_unrank(q);
    let (i, j) = pair_unrank(x);
    let (r, s) = pair_unrank(y);
    ((i as usize, j as usize), (r as usize, s as usize))
}

/// Query indices selected by `sampling`, deterministic in the rng state.
fn select_queries<R: Rng>(universe: u64, sampling: Sampling, rng: &mut R) -> Result<Vec<u64>> {
    match sampling {
        Sampling::Count(m) => {
            if m > universe {
                return Err(Error::CountExceedsUniverse { requested: m, universe });
            }
            let length = usize::try_from(universe)
                .map_err(|_| Error::InvalidParameter("query universe exceeds usize".into()))?;
            Ok(index::sample(rng, length, m as usize).into_iter().map(|q| q as u64).collect())
        }
        Sampling::Rate(p) => {
            check_rate(p)?;
            if p >= 1.0 {
                return Ok((0..universe).collect());
            }
            // geometric gaps between successive observed queries
            let gaps = Geometric::new(p).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let mut out = Vec::with_capacity((p * universe as f64 * 1.1) as usize + 16);
            let mut q = gaps.sample(rng);
            while q < universe {
                out.push(q);
                q = match q.checked_add(gaps.sample(rng) + 1) {
                    Some(next) => next,
                    None => break,
                };
            }
            Ok(out)
        }
    }
}

fn flip_probability(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok(0.5 * (1.0 - epsilon))
}

/// Samples noisy triplets: `(i, j, r)` when the reported answer is `w_ij > w_ir`.
pub fn sample_triplets(
    w: &LatentSimilarities,
    sampling: Sampling,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<TripletRecord>> {
    let flip = flip_probability(epsilon)?;
    let n = w.n();
    if n < 3 {
        return match sampling {
            Sampling::Count(m) if m > 0 => Err(Error::CountExceedsUniverse { requested: m, universe: 0 }),
            _ => Ok(Vec::new()),
        };
    }
    let mut rng = stage_rng(seed, Stage::Comparisons);
    let queries = select_queries(triplet_universe(n), sampling, &mut rng)?;
    Ok(queries
        .into_iter()
        .map(|q| {
            let (i, j, r) = triplet_query(n, q);
            let truth = w.get(i, j) > w.get(i, r);
            let answer = truth ^ (rng.random::<f64>() < flip);
            if answer {
                TripletRecord { i, j, r }
            } else {
                TripletRecord { i, j: r, r: j }
            }
        })
        .collect())
}

/// Samples noisy quadruplets: `(i, j, r, s)` when the reported answer is `w_ij > w_rs`.
pub fn sample_quadruplets(
    w: &LatentSimilarities,
    sampling: Sampling,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<QuadrupletRecord>> {
    let flip = flip_probability(epsilon)?;
    let n = w.n();
    let universe = quadruplet_universe(n);
    let mut rng = stage_rng(seed, Stage::Comparisons);
    let queries = select_queries(universe, sampling, &mut rng)?;
    Ok(queries
        .into_iter()
        .map(|q| {
            let ((i, j), (r, s)) = quadruplet_query(q);
            let truth = w.get(i, j) > w.get(r, s);
            let answer = truth ^ (rng.random::<f64>() < flip);
            if answer {
                QuadrupletRecord { i, j, r, s }
            } else {
                QuadrupletRecord { i: r, j: s, r: i, s: j }
            }
        })
        .collect())
}
