use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EstimatorConfig, ResolvedConfig};
use super::kernel::{Kernel, KernelSpec};
use super::{CurveOnGrid, ObservationSet};
use crate::error::{Error, Result};
use crate::simulator::GenealogyTree;

/// An estimated division rate with per-point diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub b_hat: CurveOnGrid,
    /// Kernel density at `y/2`, the numerator factor at each grid point `y`.
    pub nu_half: Vec<f64>,
    /// Denominator before applying the threshold.
    pub raw_denominator: Vec<f64>,
    /// Whether the threshold replaced the raw denominator.
    pub clipped: Vec<bool>,
    /// Grid points where a signed kernel gave a negative density, set to 0.
    pub negative_clips: usize,
    pub resolved: ResolvedConfig,
    /// Common growth rate used by the pooled variant.
    pub pooled_tau: Option<f64>,
}

impl Estimate {
    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        self.b_hat.xs()
    }
}

/// Indicator term `weight · 1{lo <= y <= hi}` of the denominator.
#[derive(Clone, Copy)]
struct Term {
    lo: f64,
    hi: f64,
    weight: f64,
}

struct Prepared {
    sizes: Vec<f64>,
    terms: Vec<Term>,
}

impl Prepared {
    fn sort_terms(mut terms: Vec<Term>) -> Vec<Term> {
        terms.sort_by(|a, b| {
            a.lo.total_cmp(&b.lo)
                .then(a.hi.total_cmp(&b.hi))
                .then(a.weight.total_cmp(&b.weight))
        });
        terms
    }

    fn from_obs(obs: &ObservationSet, tau: Option<f64>) -> Self {
        let rows = obs.canonical();
        let sizes = rows.iter().map(|o| o.size_birth).collect();
        let terms = rows
            .iter()
            .map(|o| {
                let v = tau.unwrap_or(o.growth_rate);
                Term {
                    lo: o.size_birth,
                    hi: o.size_birth * (v * o.lifetime).exp(),
                    weight: 1.0 / v,
                }
            })
            .collect();
        Prepared {
            sizes,
            terms: Self::sort_terms(terms),
        }
    }

    fn density(&self, y: f64, h: f64, kernel: &Kernel) -> f64 {
        let reach = kernel.support() * h;
        let start = self.sizes.partition_point(|&x| x < y - reach);
        let end = self.sizes.partition_point(|&x| x <= y + reach);
        let sum: f64 = self.sizes[start..end]
            .iter()
            .map(|&x| kernel.eval_scaled(x - y, h))
            .sum();
        sum / self.sizes.len() as f64
    }

    fn raw_denominator(&self, y: f64) -> f64 {
        let end = self.terms.partition_point(|t| t.lo <= y);
        let sum: f64 = self.terms[..end].iter().filter(|t| y <= t.hi).map(|t| t.weight).sum();
        sum / self.terms.len() as f64
    }

    fn estimate(&self, r: ResolvedConfig, kernel: &KernelSpec, pooled_tau: Option<f64>) -> Result<Estimate> {
        let kernel = kernel.build();
        let points: Vec<(f64, bool, f64)> = (1..=r.m)
            .into_par_iter()
            .map(|i| {
                let y = i as f64 * r.dx;
                let nu = self.density(0.5 * y, r.h, &kernel);
                (nu.max(0.0), nu < 0.0, self.raw_denominator(y))
            })
            .collect();
        let mut b = Vec::with_capacity(r.m);
        let (mut nu_half, mut raw_denominator, mut clipped) = (Vec::new(), Vec::new(), Vec::new());
        let mut negative_clips = 0;
        for (i, &(nu, negative, raw)) in points.iter().enumerate() {
            let y = (i + 1) as f64 * r.dx;
            b.push(0.5 * y * nu / raw.max(r.varpi));
            nu_half.push(nu);
            raw_denominator.push(raw);
            clipped.push(raw < r.varpi);
            negative_clips += negative as usize;
        }
        Ok(Estimate {
            b_hat: CurveOnGrid::new(r.dx, r.dx, b)?,
            nu_half,
            raw_denominator,
            clipped,
            negative_clips,
            resolved: r,
            pooled_tau,
        })
    }
}

/// `n⁻¹ Σ K_h(ξ_u − y)`, set to 0 if a signed kernel makes it negative.
pub fn kernel_density_nu(obs: &ObservationSet, y: f64, h: f64, kernel: &KernelSpec) -> f64 {
    Prepared::from_obs(obs, None).density(y, h, &kernel.build()).max(0.0)
}

/// `max(n⁻¹ Σ τ_u⁻¹ 1{ξ_u ≤ y ≤ ξ_u e^{τ_u ζ_u}}, ϖ)`.
#[allow(non_snake_case)]
pub fn denominator_D(obs: &ObservationSet, y: f64, varpi: f64) -> f64 {
    Prepared::from_obs(obs, None).raw_denominator(y).max(varpi)
}

/// Kernel density `ν̂(x_i)` on the estimator grid.
pub fn nu_curve(obs: &ObservationSet, config: &EstimatorConfig) -> Result<CurveOnGrid> {
    let r = config.resolve(obs.len())?;
    let prepared = Prepared::from_obs(obs, None);
    let kernel = config.kernel.build();
    let values = (1..=r.m)
        .into_par_iter()
        .map(|i| prepared.density(i as f64 * r.dx, r.h, &kernel).max(0.0))
        .collect();
    CurveOnGrid::new(r.dx, r.dx, values)
}

/// `B̂(y) = (y/2) ν̂(y/2) / D(y)` on the configured grid.
#[allow(non_snake_case)]
pub fn estimate_B(obs: &ObservationSet, config: &EstimatorConfig) -> Result<Estimate> {
    let r = config.resolve(obs.len())?;
    Prepared::from_obs(obs, None).estimate(r, &config.kernel, None)
}

/// As [`estimate_B`], with every growth rate replaced by the sample mean.
#[allow(non_snake_case)]
pub fn estimate_B_pooled_tau(obs: &ObservationSet, config: &EstimatorConfig) -> Result<Estimate> {
    let r = config.resolve(obs.len())?;
    let rows = obs.rows();
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), o| {
        (a.min(o.growth_rate), b.max(o.growth_rate))
    });
    // A constant sample keeps its exact value rather than a rounded mean.
    let tau = if lo == hi { lo } else { obs.mean_growth_rate() };
    Prepared::from_obs(obs, Some(tau)).estimate(r, &config.kernel, Some(tau))
}

/// Parent-indexed form: the denominator averages
/// `τ_{u⁻}⁻¹ 1{ξ_{u⁻} ≤ y, ξ_u ≥ y/2}` over every non-root cell `u`.
#[allow(non_snake_case)]
pub fn estimate_B_parent_indexed(tree: &GenealogyTree, config: &EstimatorConfig) -> Result<Estimate> {
    if tree.len() < 2 {
        return Err(Error::invalid(
            "the parent-indexed estimator needs at least one parent-child pair",
        ));
    }
    let obs = tree.observations()?;
    let r = config.resolve(obs.len())?;
    let mut sizes: Vec<f64> = tree.records().iter().map(|c| c.size_birth).collect();
    sizes.sort_by(f64::total_cmp);
    let terms = tree
        .records()
        .iter()
        .filter(|c| !c.path.is_root())
        .map(|c| {
            let parent = c
                .path
                .parent()
                .and_then(|p| tree.get(&p))
                .ok_or_else(|| Error::invalid(format!("cell {} has no recorded parent", c.path)))?;
            Ok(Term {
                lo: parent.size_birth,
                hi: 2.0 * c.size_birth,
                weight: 1.0 / parent.growth_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Prepared {
        sizes,
        terms: Prepared::sort_terms(terms),
    }
    .estimate(r, &config.kernel, None)
}
