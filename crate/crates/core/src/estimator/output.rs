use std::io::Write;

use serde::Serialize;

use super::config::EstimatorConfig;
use super::estimate::Estimate;
use crate::error::{Error, Result};
use crate::simulator::fmt_real;

pub const ESTIMATE_TSV_HEADER: &str = "y\tb_hat\tnu_hat\traw_denominator\tclipped";

/// One line per grid point; `nu_hat` is the kernel density at `y/2`.
pub fn write_estimate_tsv<W: Write>(est: &Estimate, mut out: W) -> Result<()> {
    let io = |e| Error::io("<estimate tsv>", e);
    writeln!(out, "{ESTIMATE_TSV_HEADER}").map_err(io)?;
    for (i, y) in est.grid().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            fmt_real(y),
            fmt_real(est.b_hat.values[i]),
            fmt_real(est.nu_half[i]),
            fmt_real(est.raw_denominator[i]),
            est.clipped[i] as u8
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a EstimatorConfig,
    n: usize,
    h: f64,
    varpi: f64,
    dx: f64,
    grid_points: usize,
    clipped_points: usize,
    negative_clips: usize,
    pooled_tau: Option<f64>,
}

/// JSON sidecar echoing the configuration and summary diagnostics.
pub fn write_estimate_json<W: Write>(est: &Estimate, config: &EstimatorConfig, out: W) -> Result<()> {
    let r = &est.resolved;
    let sidecar = Sidecar {
        config,
        n: r.n,
        h: r.h,
        varpi: r.varpi,
        dx: r.dx,
        grid_points: r.m,
        clipped_points: est.clipped.iter().filter(|c| **c).count(),
        negative_clips: est.negative_clips,
        pooled_tau: est.pooled_tau,
    };
    serde_json::to_writer_pretty(out, &sidecar)?;
    Ok(())
}
