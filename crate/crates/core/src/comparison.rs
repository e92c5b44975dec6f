//! Ordinal comparison records.

use std::fmt;

use crate::error::{Error, Result};

/// "Item `i` is more similar to `j` than to `r`", i.e. `w_ij > w_ir`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TripletRecord {
    pub i: usize,
    pub j: usize,
    pub r: usize,
}

impl TripletRecord {
    pub fn new(i: usize, j: usize, r: usize) -> Result<Self> {
        let rec = Self { i, j, r };
        rec.validate(usize::MAX)?;
        Ok(rec)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let Self { i, j, r } = *self;
        if i == j || i == r || j == r {
            return Err(Error::InvalidRecord(format!("duplicate index in triplet ({i}, {j}, {r})")));
        }
        if let Some(bad) = [i, j, r].into_iter().find(|&x| x >= n) {
            return Err(Error::InvalidRecord(format!("index {bad} out of range for n = {n}")));
        }
        Ok(())
    }
}

impl fmt::Display for TripletRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.i, self.j, self.r)
    }
}

/// "Pair `(i, j)` is more similar than pair `(r, s)`", i.e. `w_ij > w_rs`.
///
/// Each pair is stored with its smaller index first; the order of the two pairs
/// carries the meaning and is never swapped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadrupletRecord {
    pub i: usize,
    pub j: usize,
    pub r: usize,
    pub s: usize,
}

impl QuadrupletRecord {
    /// Canonicalizes each pair and validates distinctness.
    pub fn new(i: usize, j: usize, r: usize, s: usize) -> Result<Self> {
        let rec = Self::canonical(i, j, r, s);
        rec.validate(usize::MAX)?;
        Ok(rec)
    }

    pub fn canonical(i: usize, j: usize, r: usize, s: usize) -> Self {
        Self { i: i.min(j), j: i.max(j), r: r.min(s), s: r.max(s) }
    }

    pub fn is_canonical(&self) -> bool {
        self.i < self.j && self.r < self.s
    }

    pub fn first(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    pub fn second(&self) -> (usize, usize) {
        (self.r, self.s)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let Self { i, j, r, s } = *self;
        if i == j || r == s {
            return Err(Error::InvalidRecord(format!(
                "quadruplet ({i}, {j}, {r}, {s}) repeats an index within a pair"
            )));
        }
        if (i.min(j), i.max(j)) == (r.min(s), r.max(s)) {
            return Err(Error::InvalidRecord(format!(
                "quadruplet ({i}, {j}, {r}, {s}) compares a pair with itself"
            )));
        }
        if let Some(bad) = [i, j, r, s].into_iter().find(|&x| x >= n) {
            return Err(Error::InvalidRecord(format!("index {bad} out of range for n = {n}")));
        }
        Ok(())
    }
}

impl fmt::Display for QuadrupletRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.i, self.j, self.r, self.s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComparisonKind {
    Triplet,
    Quadruplet,
}

impl ComparisonKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Triplet => "triplet",
            Self::Quadruplet => "quadruplet",
        }
    }

    pub fn min_items(&self) -> usize {
        match self {
            Self::Triplet => 3,
            Self::Quadruplet => 4,
        }
    }
}

impl fmt::Display for ComparisonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ComparisonKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triplet" => Ok(Self::Triplet),
            "quadruplet" => Ok(Self::Quadruplet),
            other => Err(Error::InvalidRecord(format!("unknown comparison kind `{other}`"))),
        }
    }
}

/// Either kind of record, as read from a file whose kind is only known at runtime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    Triplet(TripletRecord),
    Quadruplet(QuadrupletRecord),
}

impl Comparison {
    pub fn kind(&self) -> ComparisonKind {
        match self {
            Self::Triplet(_) => ComparisonKind::Triplet,
            Self::Quadruplet(_) => ComparisonKind::Quadruplet,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::Triplet(t) => t.validate(n),
            Self::Quadruplet(q) => q.validate(n),
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Triplet(t) => t.fmt(f),
            Self::Quadruplet(q) => q.fmt(f),
        }
    }
}

impl From<TripletRecord> for Comparison {
    fn from(t: TripletRecord) -> Self {
        Self::Triplet(t)
    }
}

impl From<QuadrupletRecord> for Comparison {
    fn from(q: QuadrupletRecord) -> Self {
        Self::Quadruplet(q)
    }
}
