//! Nonparametric reconstruction of the division rate from observed cells.

mod config;
mod estimate;
mod kernel;
mod output;

use serde::{Deserialize, Serialize};

pub use config::{bandwidth, threshold, BandwidthRule, EstimatorConfig, GridSpec, ResolvedConfig, ThresholdRule};
pub use estimate::{
    denominator_D, estimate_B, estimate_B_parent_indexed, estimate_B_pooled_tau, kernel_density_nu, nu_curve, Estimate,
};
pub use kernel::{Kernel, KernelSpec, GAUSSIAN_TRUNCATION};
pub use output::{write_estimate_json, write_estimate_tsv, ESTIMATE_TSV_HEADER};

use crate::error::{Error, Result};

/// One observed cell: size at birth, growth rate and lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub size_birth: f64,
    pub growth_rate: f64,
    pub lifetime: f64,
}

impl Observation {
    /// Size reached at division.
    pub fn size_at_division(&self) -> f64 {
        self.size_birth * (self.growth_rate * self.lifetime).exp()
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("size_birth", self.size_birth),
            ("growth_rate", self.growth_rate),
            ("lifetime", self.lifetime),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// A non-empty collection of observations. Parent links are not kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Observation>", into = "Vec<Observation>")]
pub struct ObservationSet {
    rows: Vec<Observation>,
}

impl ObservationSet {
    pub fn new(rows: Vec<Observation>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("an observation set needs at least one row"));
        }
        for (i, r) in rows.iter().enumerate() {
            r.check().map_err(|e| Error::invalid(format!("row {i}: {e}")))?;
        }
        Ok(ObservationSet { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Observation] {
        &self.rows
    }

    pub fn mean_growth_rate(&self) -> f64 {
        let sorted = self.canonical();
        sorted.iter().map(|o| o.growth_rate).sum::<f64>() / sorted.len() as f64
    }

    /// Rows in a canonical order, so that results do not depend on input order.
    pub(crate) fn canonical(&self) -> Vec<Observation> {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| {
            a.size_birth
                .total_cmp(&b.size_birth)
                .then(a.growth_rate.total_cmp(&b.growth_rate))
                .then(a.lifetime.total_cmp(&b.lifetime))
        });
        rows
    }
}

impl TryFrom<Vec<Observation>> for ObservationSet {
    type Error = Error;

    fn try_from(rows: Vec<Observation>) -> Result<Self> {
        ObservationSet::new(rows)
    }
}

impl From<ObservationSet> for Vec<Observation> {
    fn from(set: ObservationSet) -> Self {
        set.rows
    }
}

/// Values of a function at `x0 + i dx`, `i = 0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveOnGrid {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl CurveOnGrid {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) || !x0.is_finite() {
            return Err(Error::invalid(format!("bad grid x0={x0}, dx={dx}")));
        }
        if values.is_empty() {
            return Err(Error::invalid("a curve needs at least one value"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("curve value {v} is not finite")));
        }
        Ok(CurveOnGrid { x0, dx, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.x(i))
    }

    /// Linear interpolation, zero outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let s = (x - self.x0) / self.dx;
        if s < 0.0 || s > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = (s.floor() as usize).min(self.values.len().saturating_sub(2));
        if self.values.len() == 1 {
            return self.values[0];
        }
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn aligned_with(&self, other: &CurveOnGrid) -> bool {
        self.len() == other.len() && self.x0 == other.x0 && self.dx == other.dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(x: f64, v: f64, z: f64) -> Observation {
        Observation {
            size_birth: x,
            growth_rate: v,
            lifetime: z,
        }
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(ObservationSet::new(vec![]).is_err());
        assert!(ObservationSet::new(vec![obs(1.0, 0.0, 1.0)]).is_err());
        assert!(ObservationSet::new(vec![obs(1.0, 1.0, f64::NAN)]).is_err());
        assert!(ObservationSet::new(vec![obs(1.0, 1.0, 1.0)]).is_ok());
    }

    #[test]
    fn json_validates() {
        assert!(serde_json::from_str::<ObservationSet>("[]").is_err());
        let set: ObservationSet =
            serde_json::from_str(r#"[{"size_birth":1.0,"growth_rate":2.0,"lifetime":0.5}]"#).unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn curve_interpolation() {
        let c = CurveOnGrid::new(1.0, 0.5, vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(c.interpolate(1.25), 0.5);
        assert_eq!(c.interpolate(2.0), 4.0);
        assert_eq!(c.interpolate(0.9), 0.0);
        assert!(CurveOnGrid::new(0.0, 1.0, vec![f64::INFINITY]).is_err());
    }
}
