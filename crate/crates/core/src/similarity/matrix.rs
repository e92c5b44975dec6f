use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimilarityKind {
    Adds3,
    Adds4,
    Mulk3,
    Mulk4,
    External,
}

impl SimilarityKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Adds3 => "adds3",
            Self::Adds4 => "adds4",
            Self::Mulk3 => "mulk3",
            Self::Mulk4 => "mulk4",
            Self::External => "external",
        }
    }

    pub fn is_additive(&self) -> bool {
        matches!(self, Self::Adds3 | Self::Adds4)
    }
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "adds3" => Self::Adds3,
            "adds4" => Self::Adds4,
            "mulk3" => Self::Mulk3,
            "mulk4" => Self::Mulk4,
            "external" => Self::External,
            other => return Err(Error::KindMismatch(format!("unknown similarity kind `{other}`"))),
        })
    }
}

/// Dense symmetric pairwise similarity matrix.
///
/// Matrices produced by the comparison builders have a zero diagonal;
/// `External` matrices (ideal block matrices, user input) may carry one.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    values: DMatrix<f64>,
    kind: SimilarityKind,
}

impl SimilarityMatrix {
    pub fn zeros(n: usize, kind: SimilarityKind) -> Self {
        Self { values: DMatrix::zeros(n, n), kind }
    }

    /// Wraps `values`, rejecting non-square or non-symmetric input.
    pub fn new(values: DMatrix<f64>, kind: SimilarityKind) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::DimensionMismatch { expected: values.nrows(), found: values.ncols() });
        }
        let asym = max_asymmetry(&values);
        let scale = values.amax().max(1.0);
        if asym > 1e-12 * scale || !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self { values, kind })
    }

    pub(crate) fn from_parts(values: DMatrix<f64>, kind: SimilarityKind) -> Self {
        Self { values, kind }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Same matrix with the diagonal set to zero.
    pub fn with_zero_diagonal(&self) -> Self {
        let mut values = self.values.clone();
        values.fill_diagonal(0.0);
        Self { values, kind: self.kind }
    }

    /// Writes `# similarity n=<n> kind=<kind>` then one row per line, values with
    /// 17 significant digits.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# similarity n={} kind={}", self.n(), self.kind)?;
        let mut line = String::new();
        for i in 0..self.n() {
            line.clear();
            for j in 0..self.n() {
                if j > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{:.16e}", self.values[(i, j)]));
            }
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_dump(BufWriter::new(File::create(path)?))
    }

    pub fn read_dump<R: BufRead>(source: R) -> Result<Self> {
        let mut lines = source.lines();
        let bad = |line: usize, message: String| Error::Parse { path: "<matrix>".into(), line, message };
        let header = lines.next().ok_or_else(|| bad(1, "empty matrix file".into()))??;
        let rest = header
            .strip_prefix("# similarity")
            .ok_or_else(|| bad(1, "expected `# similarity n=<n> kind=<kind>`".into()))?;
        let (mut n, mut kind) = (None, SimilarityKind::External);
        for token in rest.split_whitespace() {
            match token.split_once('=') {
                Some(("n", v)) => n = Some(v.parse::<usize>().map_err(|e| bad(1, e.to_string()))?),
                Some(("kind", v)) => kind = v.parse()?,
                _ => return Err(bad(1, format!("unexpected header token `{token}`"))),
            }
        }
        let n = n.ok_or_else(|| bad(1, "header is missing n=".into()))?;
        let mut values = DMatrix::zeros(n, n);
        for i in 0..n {
            let line = lines.next().ok_or_else(|| bad(i + 2, format!("expected {n} rows")))??;
            let mut count = 0;
            for (j, tok) in line.split_whitespace().enumerate() {
                if j >= n {
                    return Err(bad(i + 2, format!("row has more than {n} values")));
                }
                values[(i, j)] = tok.parse().map_err(|_| bad(i + 2, format!("bad value `{tok}`")))?;
                count += 1;
            }
            if count != n {
                return Err(bad(i + 2, format!("row has {count} values, expected {n}")));
            }
        }
        Self::new(values, kind)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_dump(BufReader::new(File::open(path)?))
    }
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}
