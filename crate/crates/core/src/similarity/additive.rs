//! Additive similarities, built in one pass and mergeable across stream chunks.
//!
//! A triplet `(i, j, r)` adds one to `S_ij` and subtracts one from `S_ir`; a
//! quadruplet `(i, j, r, s)` adds one to `S_ij` and subtracts one from `S_rs`.
//! Counts are kept as exact integers until the matrix is materialized.

use nalgebra::DMatrix;

use super::matrix::{SimilarityKind, SimilarityMatrix};
use crate::comparison::{QuadrupletRecord, TripletRecord};
use crate::error::{Error, Result};

/// Running integer counts for an additive similarity.
///
/// Accumulators over disjoint chunks of a stream can be filled independently
/// and combined with [`AdditiveAccumulator::merge`]; the result equals a single
/// pass over the whole stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditiveAccumulator {
    n: usize,
    kind: SimilarityKind,
    // packed upper triangle, row-major, diagonal excluded
    counts: Vec<i64>,
    records: u64,
}

impl AdditiveAccumulator {
    pub fn new(n: usize, kind: SimilarityKind) -> Result<Self> {
        if !kind.is_additive() {
            return Err(Error::KindMismatch(format!("{kind} is not an additive similarity")));
        }
        Ok(Self { n, kind, counts: vec![0; n * n.saturating_sub(1) / 2], records: 0 })
    }

    pub fn triplets(n: usize) -> Self {
        Self::new(n, SimilarityKind::Adds3).expect("additive kind")
    }

    pub fn quadruplets(n: usize) -> Self {
        Self::new(n, SimilarityKind::Adds4).expect("additive kind")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    /// Number of records folded in so far.
    pub fn records(&self) -> u64 {
        self.records
    }

    #[inline]
    fn slot(&self, a: usize, b: usize) -> usize {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        lo * (2 * self.n - lo - 1) / 2 + (hi - lo - 1)
    }

    pub fn push_triplet(&mut self, t: TripletRecord) -> Result<()> {
        if self.kind != SimilarityKind::Adds3 {
            return Err(Error::KindMismatch("triplet pushed into an adds4 accumulator".into()));
        }
        t.validate(self.n)?;
        let up = self.slot(t.i, t.j);
        let down = self.slot(t.i, t.r);
        self.counts[up] += 1;
        self.counts[down] -= 1;
        self.records += 1;
        Ok(())
    }

    pub fn push_quadruplet(&mut self, q: QuadrupletRecord) -> Result<()> {
        if self.kind != SimilarityKind::Adds4 {
            return Err(Error::KindMismatch("quadruplet pushed into an adds3 accumulator".into()));
        }
        q.validate(self.n)?;
        let up = self.slot(q.i, q.j);
        let down = self.slot(q.r, q.s);
        self.counts[up] += 1;
        self.counts[down] -= 1;
        self.records += 1;
        Ok(())
    }

    pub fn extend_triplets<I: IntoIterator<Item = TripletRecord>>(&mut self, records: I) -> Result<()> {
        records.into_iter().try_for_each(|t| self.push_triplet(t))
    }

    pub fn extend_quadruplets<I: IntoIterator<Item = QuadrupletRecord>>(
        &mut self,
        records: I,
    ) -> Result<()> {
        records.into_iter().try_for_each(|q| self.push_quadruplet(q))
    }

    pub fn merge(mut self, other: &Self) -> Result<Self> {
        if self.kind != other.kind {
            return Err(Error::KindMismatch(format!("cannot merge {} with {}", self.kind, other.kind)));
        }
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.records += other.records;
        Ok(self)
    }

    pub fn count(&self, i: usize, j: usize) -> i64 {
        if i == j {
            0
        } else {
            self.counts[self.slot(i, j)]
        }
    }

    pub fn finish(&self) -> SimilarityMatrix {
        let values = DMatrix::from_fn(self.n, self.n, |i, j| self.count(i, j) as f64);
        SimilarityMatrix::from_parts(values, self.kind)
    }
}

/// AddS-3 from a triplet stream.
pub fn build_adds3<I: IntoIterator<Item = TripletRecord>>(records: I, n: usize) -> Result<SimilarityMatrix> {
    let mut acc = AdditiveAccumulator::triplets(n);
    acc.extend_triplets(records)?;
    Ok(acc.finish())
}

/// AddS-4 from a quadruplet stream.
pub fn build_adds4<I: IntoIterator<Item = QuadrupletRecord>>(
    records: I,
    n: usize,
) -> Result<SimilarityMatrix> {
    let mut acc = AdditiveAccumulator::quadruplets(n);
    acc.extend_quadruplets(records)?;
    Ok(acc.finish())
}

/// Entrywise sum of two additive similarities of the same kind and size.
pub fn merge_additive(a: &SimilarityMatrix, b: &SimilarityMatrix) -> Result<SimilarityMatrix> {
    if !a.kind().is_additive() || !b.kind().is_additive() {
        return Err(Error::KindMismatch(format!(
            "only additive similarities merge, got {} and {}",
            a.kind(),
            b.kind()
        )));
    }
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch(format!("cannot merge {} with {}", a.kind(), b.kind())));
    }
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: b.n() });
    }
    Ok(SimilarityMatrix::from_parts(a.values() + b.values(), a.kind()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_partition, sample_similarities, sample_triplets, DistributionSpec, Sampling};

    #[test]
    fn single_triplet() {
        let s = build_adds3([TripletRecord { i: 0, j: 1, r: 2 }], 3).unwrap();
        assert_eq!(s.get(0, 1), 1.0);
        assert_eq!(s.get(1, 0), 1.0);
        assert_eq!(s.get(0, 2), -1.0);
        assert_eq!(s.get(1, 2), 0.0);
        assert_eq!(s.get(0, 0), 0.0);
    }

    #[test]
    fn single_quadruplet() {
        let s = build_adds4([QuadrupletRecord { i: 0, j: 1, r: 2, s: 3 }], 4).unwrap();
        assert_eq!(s.get(0, 1), 1.0);
        assert_eq!(s.get(2, 3), -1.0);
        assert_eq!(s.values().iter().filter(|v| **v != 0.0).count(), 4);
    }

    #[test]
    fn empty_streams_give_zero() {
        assert_eq!(build_adds3([], 5).unwrap(), SimilarityMatrix::zeros(5, SimilarityKind::Adds3));
        assert_eq!(build_adds4([], 5).unwrap(), SimilarityMatrix::zeros(5, SimilarityKind::Adds4));
    }

    #[test]
    fn out_of_range_errors() {
        assert!(build_adds3([TripletRecord { i: 0, j: 1, r: 3 }], 3).is_err());
        assert!(build_adds4([QuadrupletRecord { i: 0, j: 1, r: 2, s: 3 }], 3).is_err());
    }

    #[test]
    fn noiseless_four_items_two_clusters() {
        // Latent draws with every in-cluster similarity above every cross one.
        let labels = [0usize, 0, 1, 1];
        let w = crate::model::LatentSimilarities::from_fn(4, |i, j| {
            if labels[i] == labels[j] {
                10.0 + (i + j) as f64
            } else {
                (i * 4 + j) as f64 / 100.0
            }
        });
        let t = sample_triplets(&w, Sampling::Rate(1.0), 1.0, 0).unwrap();
        let s = build_adds3(t, 4).unwrap();
        assert_eq!(s.get(0, 1), 4.0);
        assert_eq!(s.get(2, 3), 4.0);
    }

    #[test]
    fn merge_rules() {
        let a = build_adds3([TripletRecord { i: 0, j: 1, r: 2 }], 3).unwrap();
        let z = SimilarityMatrix::zeros(3, SimilarityKind::Adds3);
        assert_eq!(merge_additive(&a, &z).unwrap(), a);
        let q = SimilarityMatrix::zeros(3, SimilarityKind::Adds4);
        assert!(merge_additive(&a, &q).is_err());
        let m = SimilarityMatrix::zeros(3, SimilarityKind::Mulk3);
        assert!(merge_additive(&m, &m).is_err());
        assert!(merge_additive(&a, &SimilarityMatrix::zeros(4, SimilarityKind::Adds3)).is_err());
        let acc = AdditiveAccumulator::triplets(3);
        assert!(acc.merge(&AdditiveAccumulator::quadruplets(3)).is_err());
    }

    #[test]
    fn chunked_accumulation_matches_single_pass() {
        let p = generate_partition(30, &[15, 15], 0).unwrap();
        let w = sample_similarities(&p, &DistributionSpec::Uniform01, &DistributionSpec::Uniform01, 0).unwrap();
        let t = sample_triplets(&w, Sampling::Count(3000), 0.5, 1).unwrap();
        let whole = build_adds3(t.iter().copied(), 30).unwrap();
        let merged = t
            .chunks(700)
            .map(|c| {
                let mut acc = AdditiveAccumulator::triplets(30);
                acc.extend_triplets(c.iter().copied()).unwrap();
                acc
            })
            .try_fold(AdditiveAccumulator::triplets(30), |a, b| a.merge(&b))
            .unwrap();
        assert_eq!(merged.records(), 3000);
        assert_eq!(merged.finish(), whole);
    }
}
