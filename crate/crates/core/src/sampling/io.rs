//! Plain-text observation files.
//!
//! Format: a header line `n m s semantics` (dimensions, record count, and
//! either `per_entry` or `per_observation`), followed by `s` lines
//! `i j value` with zero-based indices and values printed with 17
//! significant digits (round-trip exact for `f64`). Provenance (sample mode
//! and seed) is not part of the format, so loaded sets carry `None` there.

use super::{ObservationRecord, ObservationSemantics, ObservationSet};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};
use std::path::Path;

pub fn write_observations<W: Write>(w: &mut W, obs: &ObservationSet) -> Result<()> {
    writeln!(
        w,
        "{} {} {} {}",
        obs.n,
        obs.m,
        obs.records.len(),
        obs.semantics.as_str()
    )?;
    for rec in &obs.records {
        writeln!(w, "{} {} {:.16e}", rec.i, rec.j, rec.value)?;
    }
    Ok(())
}

pub fn write_observations_file<P: AsRef<Path>>(path: P, obs: &ObservationSet) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_observations(&mut file, obs)?;
    file.flush()?;
    Ok(())
}

pub fn read_observations<R: BufRead>(r: &mut R) -> Result<ObservationSet> {
    let mut lines = r.lines();
    let header = loop {
        match lines.next() {
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(Error::Parse("empty observation file".into())),
        }
    };
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 4 {
        return Err(Error::Parse(format!(
            "observation header needs 'n m s semantics', got '{header}'"
        )));
    }
    let n: usize = head[0]
        .parse()
        .map_err(|_| Error::Parse(format!("bad row count '{}'", head[0])))?;
    let m: usize = head[1]
        .parse()
        .map_err(|_| Error::Parse(format!("bad column count '{}'", head[1])))?;
    let s: usize = head[2]
        .parse()
        .map_err(|_| Error::Parse(format!("bad record count '{}'", head[2])))?;
    let semantics = ObservationSemantics::parse(head[3])?;
    if n == 0 || m == 0 {
        return Err(Error::Parse("observation grid must be non-empty".into()));
    }

    let mut records = Vec::with_capacity(s);
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("bad observation line '{trimmed}'")));
        }
        let i: usize = parts[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad row index '{}'", parts[0])))?;
        let j: usize = parts[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad column index '{}'", parts[1])))?;
        let value: f64 = parts[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad value '{}'", parts[2])))?;
        if i >= n || j >= m {
            return Err(Error::Parse(format!(
                "record position ({i}, {j}) outside {n}×{m} grid"
            )));
        }
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("observation value at ({i}, {j})")));
        }
        records.push(ObservationRecord { i, j, value });
    }
    if records.len() != s {
        return Err(Error::Parse(format!(
            "header promised {s} records, file holds {}",
            records.len()
        )));
    }
    Ok(ObservationSet {
        n,
        m,
        semantics,
        records,
        sample_mode: None,
        seed: None,
    })
}

pub fn read_observations_file<P: AsRef<Path>>(path: P) -> Result<ObservationSet> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_observations(&mut file)
}
