//! Matrix file formats: the SMS sparse triplet format of the SIMC collection
//! and a plain dense text format.

use std::io::BufRead;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::blackbox::IntMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    /// Header `n m <tag>`, then 1-indexed `i j v` triplets, terminated `0 0 0`.
    Sms,
    /// First line `n`, then n*n whitespace-separated signed integers.
    Dense,
}

pub fn read_matrix<R: BufRead>(reader: R, format: MatrixFormat) -> Result<IntMatrix> {
    match format {
        MatrixFormat::Sms => read_sms(reader),
        MatrixFormat::Dense => read_dense(reader),
    }
}

fn parse<T: FromStr>(token: &str, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}: {token:?}")))
}

/// Read the SMS sparse format. Only square matrices are accepted; duplicate
/// entries accumulate.
pub fn read_sms<R: BufRead>(reader: R) -> Result<IntMatrix> {
    let mut lines = reader.lines();
    let header = loop {
        match lines.next() {
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(Error::Parse("empty input".into())),
        }
    };
    let mut it = header.split_whitespace();
    let rows: usize = parse(it.next().ok_or_else(|| Error::Parse("missing row count".into()))?, "row count")?;
    let cols: usize = parse(it.next().ok_or_else(|| Error::Parse("missing column count".into()))?, "column count")?;
    if rows != cols {
        return Err(Error::Parse(format!(
            "only square matrices supported, got {rows}x{cols}"
        )));
    }
    let mut matrix = IntMatrix::zero(rows);
    let mut terminated = false;
    'outer: for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        while let Some(tok) = it.next() {
            let i: usize = parse(tok, "row index")?;
            let j: usize = parse(
                it.next().ok_or_else(|| Error::Parse("truncated triplet".into()))?,
                "column index",
            )?;
            let v: BigInt = parse(
                it.next().ok_or_else(|| Error::Parse("truncated triplet".into()))?,
                "entry value",
            )?;
            if i == 0 && j == 0 && v.is_zero() {
                terminated = true;
                break 'outer;
            }
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(Error::Parse(format!("index ({i}, {j}) out of range")));
            }
            matrix.add_entry(i - 1, j - 1, v);
        }
    }
    if !terminated {
        return Err(Error::Parse("missing 0 0 0 terminator".into()));
    }
    Ok(matrix)
}

/// Read the dense format: `n` then n*n signed integers in row-major order
/// (line breaks are not significant).
pub fn read_dense<R: BufRead>(reader: R) -> Result<IntMatrix> {
    let mut tokens = Vec::new();
    for line in reader.lines() {
        let line = line?;
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    let mut it = tokens.iter();
    let n: usize = parse(
        it.next().ok_or_else(|| Error::Parse("empty input".into()))?,
        "dimension",
    )?;
    let mut entries = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let tok = it
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {} entries", n * n)))?;
        entries.push(parse::<BigInt>(tok, "entry")?);
    }
    if it.next().is_some() {
        return Err(Error::Parse("trailing tokens after matrix entries".into()));
    }
    IntMatrix::new(n, entries)
}
