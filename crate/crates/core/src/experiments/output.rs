use std::io::Write;
use std::path::Path;

use super::study::{ConfidenceBand, ConvergenceStudy};
use crate::error::{Error, Result};
use crate::simulator::fmt_real;

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path).map_err(io(path))?))
}

/// `log2_n  n  mean_error  std_dev  replicates`, one line per size.
pub fn write_study_tsv(study: &ConvergenceStudy, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "log2_n\tn\tmean_error\tstd_dev\treplicates").map_err(io(path))?;
    for row in &study.rows {
        let s = &row.summary;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            row.log2_n,
            s.n,
            fmt_real(s.mean_error),
            fmt_real(s.std_dev),
            s.replicates
        )
        .map_err(io(path))?;
    }
    out.flush().map_err(io(path))
}

/// `x  lower  median  upper  truth`.
pub fn write_band_tsv(band: &ConfidenceBand, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "x\tlower\tmedian\tupper\ttruth").map_err(io(path))?;
    for i in 0..band.lower.len() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            fmt_real(band.x(i)),
            fmt_real(band.lower[i]),
            fmt_real(band.median[i]),
            fmt_real(band.upper[i]),
            fmt_real(band.truth[i])
        )
        .map_err(io(path))?;
    }
    out.flush().map_err(io(path))
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(io(path))?;
    out.flush().map_err(io(path))
}
