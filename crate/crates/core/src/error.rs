use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cumulative hazard from size {size} at growth rate {growth} stays below {target} up to t_max = {t_max}")]
    NonDivergentHazard {
        size: f64,
        growth: f64,
        target: f64,
        t_max: f64,
    },

    #[error("growth-rate rejection sampler exceeded {attempts} attempts from parent rate {parent}")]
    RejectionBudgetExceeded { parent: f64, attempts: u64 },

    #[error("snapshot at t = {t} is censored: leaf {path:?} divides at {division_time}")]
    HorizonExceeded { t: f64, path: String, division_time: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last L1 change {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("denominator vanishes at {} grid point(s), first at y = {}", points.len(), points.first().copied().unwrap_or(f64::NAN))]
    DegenerateDenominator { points: Vec<f64> },

    #[error("CFL violation: tau * x_max * dt / dx = {ratio} exceeds {cfl}")]
    CflViolation { ratio: f64, cfl: f64 },

    #[error("Lyapunov function overflows beyond x = {truncation} (requested grid reaches {requested})")]
    QuadratureOverflow { truncation: f64, requested: f64 },

    #[error("no grid point passes the conditioning threshold {threshold}")]
    EmptyConditioningSet { threshold: f64 },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("no observation left after filtering ({rejected} row(s) rejected)")]
    EmptyAfterFiltering { rejected: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
