//! Genealogy CSV: `path,size_birth,growth_rate,lifetime,birth_time`, one row
//! per cell, the root's path being the empty string. Reals are written with
//! 17 significant digits so a round trip is bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use super::path::TreePath;
use super::tree::CellRecord;
use crate::error::{Error, Result};

pub const GENEALOGY_HEADER: [&str; 5] = ["path", "size_birth", "growth_rate", "lifetime", "birth_time"];

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_genealogy<W: Write>(records: &[CellRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GENEALOGY_HEADER)?;
    for r in records {
        w.write_record([
            r.path.to_string(),
            fmt_real(r.size_birth),
            fmt_real(r.growth_rate),
            fmt_real(r.lifetime),
            fmt_real(r.birth_time),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<genealogy csv>", e))?;
    Ok(())
}

pub fn write_genealogy_file(records: &[CellRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_genealogy(records, std::io::BufWriter::new(file))
}

pub fn read_genealogy<R: Read>(input: R) -> Result<Vec<CellRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
    };
    let idx: Vec<usize> = GENEALOGY_HEADER.iter().map(|h| column(h)).collect::<Result<_>>()?;
    let mut records = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let field = |k: usize| row.get(idx[k]).unwrap_or("").trim();
        let real = |k: usize| {
            field(k)
                .parse::<f64>()
                .map_err(|e| Error::Schema(format!("line {}: column {}: {e}", line + 2, GENEALOGY_HEADER[k])))
        };
        records.push(CellRecord {
            path: field(0).parse::<TreePath>()?,
            size_birth: real(1)?,
            growth_rate: real(2)?,
            lifetime: real(3)?,
            birth_time: real(4)?,
        });
    }
    Ok(records)
}

pub fn read_genealogy_file(path: impl AsRef<Path>) -> Result<Vec<CellRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_genealogy(std::io::BufReader::new(file))
}
