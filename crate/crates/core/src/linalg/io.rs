//! Plain-text matrix files.
//!
//! Format: a header line `rows cols`, then one line per row with
//! space-separated entries. Writers emit 17 significant digits so every
//! `f64` round-trips exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::Mat;

/// Write a matrix in the plain-text format.
pub fn write_matrix<W: Write>(out: &mut W, x: &Mat) -> Result<()> {
    writeln!(out, "{} {}", x.rows(), x.cols())?;
    for i in 0..x.rows() {
        let mut first = true;
        for value in x.row(i) {
            if !first {
                write!(out, " ")?;
            }
            first = false;
            write!(out, "{value:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Write a matrix to `path`.
pub fn write_matrix_file<P: AsRef<Path>>(path: P, x: &Mat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, x)?;
    w.flush()?;
    Ok(())
}

/// Read a matrix in the plain-text format.
pub fn read_matrix<R: Read>(input: R) -> Result<Mat> {
    let mut lines = BufReader::new(input).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let mut dims = header.split_whitespace();
    let rows: usize = parse_dim(dims.next(), "rows")?;
    let cols: usize = parse_dim(dims.next(), "cols")?;
    if dims.next().is_some() {
        return Err(Error::Parse(format!("header must be `rows cols`, got `{header}`")));
    }

    let mut entries = Vec::with_capacity(rows.saturating_mul(cols));
    let mut row_count = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        row_count += 1;
        if row_count > rows {
            return Err(Error::Parse(format!("expected {rows} rows, found more")));
        }
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() != cols {
            return Err(Error::Parse(format!(
                "row {row_count} has {} entries, expected {cols}",
                values.len()
            )));
        }
        for token in values {
            let value: f64 = token
                .parse()
                .map_err(|_| Error::Parse(format!("bad number `{token}` in row {row_count}")))?;
            entries.push(value);
        }
    }
    if row_count != rows {
        return Err(Error::Parse(format!("expected {rows} rows, found {row_count}")));
    }
    Mat::from_vec(rows, cols, entries)
}

/// Read a matrix from `path`.
pub fn read_matrix_file<P: AsRef<Path>>(path: P) -> Result<Mat> {
    read_matrix(File::open(path)?)
}

fn parse_dim(token: Option<&str>, what: &str) -> Result<usize> {
    let token = token.ok_or_else(|| Error::Parse(format!("header missing {what}")))?;
    token
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} `{token}` in header")))
}
