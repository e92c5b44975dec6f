//! Hard assignments of items to clusters.

use std::fmt;

use crate::error::{Error, Result};

/// Assignment of `n` items to `k` non-empty clusters, labels in `0..k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
    sizes: Vec<usize>,
}

impl Partition {
    /// Builds a partition from labels that must already use every index in `0..k`.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        let mut sizes = vec![0usize; k];
        for (item, &label) in labels.iter().enumerate() {
            if label >= k {
                return Err(Error::InvalidPartition(format!(
                    "item {item} has label {label} outside 0..{k}"
                )));
            }
            sizes[label] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidPartition(format!("cluster {empty} is empty")));
        }
        Ok(Self { labels, k, sizes })
    }

    /// Builds a partition from arbitrary labels, renumbering them densely in
    /// order of first appearance.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        let k = map.len();
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        Self { labels, k, sizes }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, item: usize) -> usize {
        self.labels[item]
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn min_cluster_size(&self) -> usize {
        self.sizes.iter().copied().min().unwrap_or(0)
    }

    /// Item indices grouped by cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Partition(n={}, k={}, sizes={:?})", self.n(), self.k, self.sizes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_empty() {
        assert!(Partition::new(vec![0, 2], 2).is_err());
        assert!(Partition::new(vec![0, 0], 2).is_err());
        let p = Partition::new(vec![1, 0, 1], 2).unwrap();
        assert_eq!(p.cluster_sizes(), &[1, 2]);
        assert_eq!(p.min_cluster_size(), 1);
    }

    #[test]
    fn from_labels_renumbers_densely() {
        let p = Partition::from_labels(&[7, 7, 3, 9, 3]);
        assert_eq!(p.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(p.k(), 3);
        assert_eq!(p.members(), vec![vec![0, 1], vec![2, 4], vec![3]]);
    }
}
