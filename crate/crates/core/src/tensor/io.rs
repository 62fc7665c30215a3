//! Plain-text formats for sparse tensors and Kruskal factors.
//!
//! COO: a `shape I J K` header, then one `i j k value` line per stored cell
//! (0-based indices). Kruskal: a `kruskal I J K R` header, then the rows of
//! A, B and C in that order, one whitespace-separated row per line.
//!
//! Values are written with the shortest representation that parses back to
//! the same `f64`, so a write/read cycle is lossless.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::kruskal::KruskalTensor;
use super::matrix::Matrix;
use super::sparse::{Entry, SparseTensor3};
use crate::error::{Error, Result};

pub fn write_coo<W: Write>(t: &SparseTensor3, mut w: W) -> Result<()> {
    let [i, j, k] = t.shape();
    writeln!(w, "shape {i} {j} {k}")?;
    for e in t.entries() {
        writeln!(w, "{} {} {} {}", e.i, e.j, e.k, e.value)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_coo<R: BufRead>(r: R) -> Result<SparseTensor3> {
    let mut lines = content_lines(r);
    let (lineno, header) = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse(1, "missing `shape` header"))?;
    let shape = parse_header(lineno, &header, "shape", 3)?;
    let mut entries = Vec::new();
    for line in lines {
        let (lineno, line) = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(lineno, "expected `i j k value`"));
        }
        let idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::parse(lineno, format!("bad index {s:?}: {e}")))
        };
        let value = parse_f64(lineno, fields[3])?;
        entries.push(Entry {
            i: idx(fields[0])?,
            j: idx(fields[1])?,
            k: idx(fields[2])?,
            value,
        });
    }
    SparseTensor3::new([shape[0], shape[1], shape[2]], entries)
}

pub fn write_kruskal<W: Write>(k: &KruskalTensor, mut w: W) -> Result<()> {
    let [i, j, l] = k.shape();
    writeln!(w, "kruskal {i} {j} {l} {}", k.rank())?;
    for f in k.factors() {
        for row in 0..f.rows() {
            let line: Vec<String> = f.row(row).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_kruskal<R: BufRead>(r: R) -> Result<KruskalTensor> {
    let mut lines = content_lines(r);
    let (lineno, header) = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse(1, "missing `kruskal` header"))?;
    let dims = parse_header(lineno, &header, "kruskal", 4)?;
    let rank = dims[3];
    let mut mats = Vec::with_capacity(3);
    for &rows in &dims[..3] {
        let mut data = Vec::with_capacity(rows * rank);
        for _ in 0..rows {
            let (lineno, line) = lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::parse(lineno, "unexpected end of factor data"))?;
            let row = line
                .split_whitespace()
                .map(|s| parse_f64(lineno, s))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != rank {
                return Err(Error::parse(
                    lineno,
                    format!("expected {rank} values, found {}", row.len()),
                ));
            }
            data.extend(row);
        }
        mats.push(Matrix::from_row_major(rows, rank, data)?);
    }
    if let Some(extra) = lines.next() {
        let (lineno, _) = extra?;
        return Err(Error::parse(lineno, "trailing data after factor C"));
    }
    let c = mats.pop().unwrap();
    let b = mats.pop().unwrap();
    let a = mats.pop().unwrap();
    KruskalTensor::new(a, b, c)
}

pub fn save_coo(t: &SparseTensor3, path: impl AsRef<Path>) -> Result<()> {
    write_coo(t, BufWriter::new(File::create(path)?))
}

pub fn load_coo(path: impl AsRef<Path>) -> Result<SparseTensor3> {
    read_coo(BufReader::new(File::open(path)?))
}

pub fn save_kruskal(k: &KruskalTensor, path: impl AsRef<Path>) -> Result<()> {
    write_kruskal(k, BufWriter::new(File::create(path)?))
}

pub fn load_kruskal(path: impl AsRef<Path>) -> Result<KruskalTensor> {
    read_kruskal(BufReader::new(File::open(path)?))
}

/// Non-blank lines paired with their 1-based line numbers.
fn content_lines<R: BufRead>(r: R) -> impl Iterator<Item = Result<(usize, String)>> {
    r.lines().enumerate().filter_map(|(n, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((n + 1, l))),
        Err(e) => Some(Err(e.into())),
    })
}

fn parse_header(lineno: usize, line: &str, tag: &str, count: usize) -> Result<Vec<usize>> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some(tag) {
        return Err(Error::parse(lineno, format!("expected `{tag}` header")));
    }
    let dims = fields
        .map(|s| {
            s.parse::<usize>()
                .map_err(|e| Error::parse(lineno, format!("bad dimension {s:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if dims.len() != count {
        return Err(Error::parse(
            lineno,
            format!("`{tag}` header needs {count} dimensions"),
        ));
    }
    Ok(dims)
}

fn parse_f64(lineno: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::parse(lineno, format!("bad value {s:?}: {e}")))
}
