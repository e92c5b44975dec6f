//! Plain-text comparison files.
//!
//! ```text
//! # kind=triplet n=5
//! 0 1 2
//! 3 4 0
//! ```
//!
//! One record per line, fields separated by a single space, `\n` line endings.
//! Readers stream records lazily and validate each one against the header.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::comparison::{Comparison, ComparisonKind, QuadrupletRecord, TripletRecord};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComparisonHeader {
    pub kind: ComparisonKind,
    pub n: usize,
    /// Record count when known up front.
    pub count: Option<u64>,
}

impl ComparisonHeader {
    pub fn new(kind: ComparisonKind, n: usize) -> Self {
        Self { kind, n, count: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < self.kind.min_items() {
            return Err(Error::InvalidRecord(format!(
                "{} files need n >= {}, got {}",
                self.kind,
                self.kind.min_items(),
                self.n
            )));
        }
        Ok(())
    }

    pub fn line(&self) -> String {
        format!("# kind={} n={}", self.kind, self.n)
    }

    fn parse(line: &str) -> std::result::Result<Self, String> {
        let rest = line
            .strip_prefix('#')
            .ok_or_else(|| "header must start with `#`".to_string())?;
        let (mut kind, mut n, mut count) = (None, None, None);
        for token in rest.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| format!("malformed header token `{token}`"))?;
            match key {
                "kind" => kind = Some(value.parse::<ComparisonKind>().map_err(|e| e.to_string())?),
                "n" => n = Some(value.parse::<usize>().map_err(|e| format!("bad n: {e}"))?),
                "count" => {
                    count = Some(value.parse::<u64>().map_err(|e| format!("bad count: {e}"))?)
                }
                other => return Err(format!("unknown header key `{other}`")),
            }
        }
        let header = Self {
            kind: kind.ok_or("header is missing kind=")?,
            n: n.ok_or("header is missing n=")?,
            count,
        };
        header.validate().map_err(|e| e.to_string())?;
        Ok(header)
    }
}

/// Writes `records` under `header`, validating each record first.
pub fn write_stream<I>(path: impl AsRef<Path>, header: &ComparisonHeader, records: I) -> Result<()>
where
    I: IntoIterator,
    I::Item: Into<Comparison>,
{
    let file = File::create(path.as_ref())?;
    write_records(BufWriter::new(file), header, records)
}

pub fn write_records<W, I>(mut out: W, header: &ComparisonHeader, records: I) -> Result<()>
where
    W: Write,
    I: IntoIterator,
    I::Item: Into<Comparison>,
{
    header.validate()?;
    writeln!(out, "{}", header.line())?;
    for rec in records {
        let rec: Comparison = rec.into();
        if rec.kind() != header.kind {
            return Err(Error::InvalidRecord(format!(
                "{} record in a {} stream",
                rec.kind(),
                header.kind
            )));
        }
        rec.validate(header.n)?;
        writeln!(out, "{rec}")?;
    }
    out.flush()?;
    Ok(())
}

/// Opens a comparison file and parses its header; records are read on demand.
pub fn read_stream(path: impl AsRef<Path>) -> Result<(ComparisonHeader, RecordReader<BufReader<File>>)> {
    let path = path.as_ref();
    let file = File::open(path)?;
    RecordReader::new(BufReader::new(file), path.to_path_buf())
}

/// Lazy iterator over the records of a comparison stream.
pub struct RecordReader<R> {
    source: R,
    header: ComparisonHeader,
    path: PathBuf,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(mut source: R, path: PathBuf) -> Result<(ComparisonHeader, Self)> {
        let mut buf = String::new();
        let read = source.read_line(&mut buf)?;
        let header = if read == 0 {
            Err("empty file, expected a `# kind=... n=...` header".to_string())
        } else {
            ComparisonHeader::parse(buf.trim_end())
        }
        .map_err(|message| Error::Parse { path: path.clone(), line: 1, message })?;
        buf.clear();
        Ok((header, Self { source, header, path, line_no: 1, buf }))
    }

    pub fn header(&self) -> &ComparisonHeader {
        &self.header
    }

    fn parse_error(&self, message: String) -> Error {
        Error::Parse { path: self.path.clone(), line: self.line_no, message }
    }

    fn parse_line(&self, line: &str) -> Result<Comparison> {
        let mut fields = [0usize; 4];
        let mut count = 0;
        for token in line.split_whitespace() {
            if count == 4 {
                return Err(self.parse_error("too many fields".into()));
            }
            fields[count] = token
                .parse()
                .map_err(|_| self.parse_error(format!("`{token}` is not a non-negative integer")))?;
            count += 1;
        }
        let rec = match (self.header.kind, count) {
            (ComparisonKind::Triplet, 3) => {
                Comparison::Triplet(TripletRecord { i: fields[0], j: fields[1], r: fields[2] })
            }
            (ComparisonKind::Quadruplet, 4) => Comparison::Quadruplet(QuadrupletRecord::canonical(
                fields[0], fields[1], fields[2], fields[3],
            )),
            (kind, got) => {
                let want = if kind == ComparisonKind::Triplet { 3 } else { 4 };
                return Err(self.parse_error(format!("expected {want} fields, found {got}")));
            }
        };
        rec.validate(self.header.n).map_err(|e| self.parse_error(e.to_string()))?;
        Ok(rec)
    }

    /// Narrows the stream to triplets, failing if the header says otherwise.
    pub fn triplets(self) -> Result<impl Iterator<Item = Result<TripletRecord>>> {
        if self.header.kind != ComparisonKind::Triplet {
            return Err(Error::KindMismatch(format!("expected triplets, file holds {}", self.header.kind)));
        }
        Ok(self.map(|rec| match rec? {
            Comparison::Triplet(t) => Ok(t),
            Comparison::Quadruplet(_) => unreachable!("header kind checked"),
        }))
    }

    /// Narrows the stream to quadruplets, failing if the header says otherwise.
    pub fn quadruplets(self) -> Result<impl Iterator<Item = Result<QuadrupletRecord>>> {
        if self.header.kind != ComparisonKind::Quadruplet {
            return Err(Error::KindMismatch(format!("expected quadruplets, file holds {}", self.header.kind)));
        }
        Ok(self.map(|rec| match rec? {
            Comparison::Quadruplet(q) => Ok(q),
            Comparison::Triplet(_) => unreachable!("header kind checked"),
        }))
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<Comparison>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.source.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line_no += 1;
            let line = self.buf.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let line = line.to_owned();
            return Some(self.parse_line(&line));
        }
    }
}
