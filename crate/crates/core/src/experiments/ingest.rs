//! Lineage tables from time-lapse experiments: one row per cell with its
//! size at birth, growth rate and lifetime.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    estimate_B, estimate_B_pooled_tau, nu_curve, CurveOnGrid, Estimate, EstimatorConfig, Observation, ObservationSet,
};
use crate::model::Scheme;
use crate::quadrature::trapezoid;

/// Column names in the input file and boundary trimming per lineage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub size_birth: String,
    pub growth_rate: String,
    pub lifetime: String,
    /// Rows sharing a value form one lineage, in file order.
    #[serde(default)]
    pub lineage_id: Option<String>,
    /// Cells dropped at the start of every lineage.
    #[serde(default)]
    pub drop_first: usize,
    /// Cells dropped at the end of every lineage.
    #[serde(default)]
    pub drop_last: usize,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            size_birth: "size_birth".into(),
            growth_rate: "growth_rate".into(),
            lifetime: "lifetime".into(),
            lineage_id: None,
            drop_first: 0,
            drop_last: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based line number in the file, header included.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ingested {
    pub observations: ObservationSet,
    pub rejected: Vec<RejectedRow>,
    pub lineages: usize,
    /// Rows removed by boundary trimming.
    pub trimmed: usize,
}

pub fn ingest_lineage_csv(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<Ingested> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_lineage_reader(std::io::BufReader::new(file), mapping)
}

pub fn ingest_lineage_reader<R: std::io::Read>(input: R, mapping: &ColumnMapping) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| {
            Error::Schema(format!(
                "missing column {name:?} (have: {})",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let cols = [
        find(&mapping.size_birth)?,
        find(&mapping.growth_rate)?,
        find(&mapping.lifetime)?,
    ];
    let names = [&mapping.size_birth, &mapping.growth_rate, &mapping.lifetime];
    let lineage_col = mapping.lineage_id.as_deref().map(find).transpose()?;

    // Lineages keep the order of first appearance.
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<Observation>> = BTreeMap::new();
    let mut rejected = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let line = k + 2;
        let row = row?;
        let mut values = [0.0; 3];
        let mut problem = None;
        for (j, &c) in cols.iter().enumerate() {
            let raw = row.get(c).unwrap_or("").trim();
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => values[j] = v,
                Ok(v) => {
                    problem = Some(format!("{} = {v} is not finite and positive", names[j]));
                    break;
                }
                Err(_) => {
                    problem = Some(format!("{} = {raw:?} is not a number", names[j]));
                    break;
                }
            }
        }
        if let Some(reason) = problem {
            log::warn!("line {line}: {reason}");
            rejected.push(RejectedRow { line, reason });
            continue;
        }
        let id = lineage_col
            .map(|c| row.get(c).unwrap_or("").trim().to_string())
            .unwrap_or_default();
        if !groups.contains_key(&id) {
            order.push(id.clone());
        }
        groups.entry(id).or_default().push(Observation {
            size_birth: values[0],
            growth_rate: values[1],
            lifetime: values[2],
        });
    }
    let mut rows = Vec::new();
    let mut trimmed = 0;
    for id in &order {
        let cells = &groups[id];
        let end = cells.len().saturating_sub(mapping.drop_last);
        let kept = if mapping.drop_first < end {
            &cells[mapping.drop_first..end]
        } else {
            &cells[..0]
        };
        trimmed += cells.len() - kept.len();
        rows.extend_from_slice(kept);
    }
    if rows.is_empty() {
        return Err(Error::EmptyAfterFiltering {
            rejected: rejected.len() + trimmed,
        });
    }
    Ok(Ingested {
        observations: ObservationSet::new(rows)?,
        rejected,
        lineages: order.len(),
        trimmed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentalReport {
    pub n: usize,
    pub scheme: Scheme,
    pub h: f64,
    pub varpi: f64,
    pub dx: f64,
    /// Fraction of grid points whose raw denominator reaches `ϖ`.
    pub conditioning_coverage: f64,
    /// Trapezoid mass of `ν̂` over the grid.
    pub nu_mass: f64,
    pub pooled_tau: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentalAnalysis {
    pub estimate: Estimate,
    /// `ν̂(x)` on the same grid as `B̂`.
    pub nu: CurveOnGrid,
    pub report: ExperimentalReport,
}

/// Estimates `B` and the size density from observed cells.
pub fn analyze_experimental(
    obs: &ObservationSet,
    config: &EstimatorConfig,
    scheme: Scheme,
    pooled_tau: bool,
) -> Result<ExperimentalAnalysis> {
    let mut warnings = Vec::new();
    if obs.len() < 100 {
        let w = format!("only {} cells; estimates will be rough", obs.len());
        log::warn!("{w}");
        warnings.push(w);
    }
    let estimate = if pooled_tau {
        estimate_B_pooled_tau(obs, config)?
    } else {
        estimate_B(obs, config)?
    };
    let nu = nu_curve(obs, config)?;
    let r = estimate.resolved;
    // Include x = 0, where the density of positive sizes vanishes.
    let mut with_origin = vec![0.0];
    with_origin.extend_from_slice(&nu.values);
    let covered = estimate.clipped.iter().filter(|c| !**c).count();
    Ok(ExperimentalAnalysis {
        report: ExperimentalReport {
            n: obs.len(),
            scheme,
            h: r.h,
            varpi: r.varpi,
            dx: r.dx,
            conditioning_coverage: covered as f64 / r.m as f64,
            nu_mass: trapezoid(&with_origin, r.dx),
            pooled_tau,
            warnings,
        },
        estimate,
        nu,
    })
}
