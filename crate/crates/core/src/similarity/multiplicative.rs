//! Multiplicative comparison kernels.
//!
//! Unlike the additive similarities these need the whole stream indexed in
//! memory: records are grouped by the pair being compared against, and every
//! two items answering the same comparison contribute the product of their
//! signed answers.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::matrix::{SimilarityKind, SimilarityMatrix};
use crate::comparison::{QuadrupletRecord, TripletRecord};
use crate::error::Result;

#[inline]
fn pair_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Adds `y_a · y_b` to `S_ab` for every two distinct entries of `group`.
fn accumulate_products(values: &mut DMatrix<f64>, group: &[(usize, i64)]) {
    for (x, &(a, ya)) in group.iter().enumerate() {
        for &(b, yb) in &group[x + 1..] {
            if a == b {
                continue;
            }
            let v = (ya * yb) as f64;
            values[(a, b)] += v;
            values[(b, a)] += v;
        }
    }
}

/// MulK-3: agreement of pivots `i` and `j` over every pair they were asked
/// about, normalized by the square roots of their pivot counts.
///
/// Items that never appear as a pivot get an all-zero row and column.
pub fn build_mulk3<I: IntoIterator<Item = TripletRecord>>(records: I, n: usize) -> Result<SimilarityMatrix> {
    // (pivot, canonical pair) -> signed answer
    let mut answers: HashMap<(usize, (usize, usize)), i64> = HashMap::new();
    let mut pivot_counts = vec![0u64; n];
    for t in records {
        t.validate(n)?;
        pivot_counts[t.i] += 1;
        let sign = if t.j < t.r { 1 } else { -1 };
        *answers.entry((t.i, pair_key(t.j, t.r))).or_default() += sign;
    }

    let mut by_pair: HashMap<(usize, usize), Vec<(usize, i64)>> = HashMap::new();
    for ((pivot, pair), y) in answers {
        if y != 0 {
            by_pair.entry(pair).or_default().push((pivot, y));
        }
    }

    let mut values = DMatrix::zeros(n, n);
    for group in by_pair.values() {
        accumulate_products(&mut values, group);
    }
    let norms: Vec<f64> = pivot_counts.iter().map(|&c| (c as f64).sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            let denom = norms[i] * norms[j];
            values[(i, j)] = if i == j || denom == 0.0 { 0.0 } else { values[(i, j)] / denom };
        }
    }
    Ok(SimilarityMatrix::from_parts(values, SimilarityKind::Mulk3))
}

/// MulK-4: for every shared item `ℓ`, agreement of pairs `(i, ℓ)` and `(j, ℓ)`
/// over every pair they were compared with.
pub fn build_mulk4<I: IntoIterator<Item = QuadrupletRecord>>(records: I, n: usize) -> Result<SimilarityMatrix> {
    // (pair, other pair) -> signed answer for "pair beats other pair"
    let mut answers: HashMap<((usize, usize), (usize, usize)), i64> = HashMap::new();
    for q in records {
        q.validate(n)?;
        let first = pair_key(q.i, q.j);
        let second = pair_key(q.r, q.s);
        *answers.entry((first, second)).or_default() += 1;
        *answers.entry((second, first)).or_default() -= 1;
    }

    // other pair -> shared endpoint -> (remaining endpoint, answer)
    let mut by_other: HashMap<(usize, usize), HashMap<usize, Vec<(usize, i64)>>> = HashMap::new();
    for (((a, b), other), y) in answers {
        if y == 0 {
            continue;
        }
        let buckets = by_other.entry(other).or_default();
        buckets.entry(a).or_default().push((b, y));
        buckets.entry(b).or_default().push((a, y));
    }

    let mut values = DMatrix::zeros(n, n);
    for buckets in by_other.values() {
        for group in buckets.values() {
            accumulate_products(&mut values, group);
        }
    }
    values.fill_diagonal(0.0);
    Ok(SimilarityMatrix::from_parts(values, SimilarityKind::Mulk4))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mulk3_small_cases() {
        let t = [TripletRecord { i: 0, j: 1, r: 2 }, TripletRecord { i: 3, j: 1, r: 2 }];
        let s = build_mulk3(t, 4).unwrap();
        assert_eq!(s.get(0, 3), 1.0);
        assert_eq!(s.get(3, 0), 1.0);
        // pivot 1 and 2 never appear
        for j in 0..4 {
            assert_eq!(s.get(1, j), 0.0);
            assert_eq!(s.get(j, 2), 0.0);
        }
        let t = [TripletRecord { i: 0, j: 1, r: 2 }, TripletRecord { i: 3, j: 2, r: 1 }];
        assert_eq!(build_mulk3(t, 4).unwrap().get(0, 3), -1.0);
    }

    #[test]
    fn mulk4_small_cases() {
        let q = [
            QuadrupletRecord { i: 0, j: 2, r: 3, s: 4 },
            QuadrupletRecord { i: 1, j: 2, r: 3, s: 4 },
        ];
        assert_eq!(build_mulk4(q, 5).unwrap().get(0, 1), 1.0);
        let q = [
            QuadrupletRecord { i: 0, j: 2, r: 3, s: 4 },
            QuadrupletRecord { i: 3, j: 4, r: 1, s: 2 },
        ];
        assert_eq!(build_mulk4(q, 5).unwrap().get(0, 1), -1.0);
        assert_eq!(build_mulk4([], 5).unwrap(), SimilarityMatrix::zeros(5, SimilarityKind::Mulk4));
    }
}
