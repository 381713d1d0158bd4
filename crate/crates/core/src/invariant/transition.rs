use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{DivisionRate, GrowthBounds, GrowthKernel, ModelSpec};
use crate::quadrature::{integrate_pieces, REL_TOL};

/// Cumulative hazard beyond which the remaining mass is below `e^{-40}`.
const TAIL_HAZARD: f64 = 40.0;

/// Transition kernel of the chain `(ξ_u, τ_u)` from a parent to a child.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvaluator {
    pub rate: DivisionRate,
    pub kernel: GrowthKernel,
    pub bounds: GrowthBounds,
}

impl TransitionEvaluator {
    pub fn new(rate: DivisionRate, kernel: GrowthKernel, bounds: GrowthBounds) -> Result<Self> {
        rate.validate()?;
        bounds.validate()?;
        kernel.validate(&bounds)?;
        Ok(TransitionEvaluator { rate, kernel, bounds })
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Self::new(spec.division_rate.clone(), spec.growth_kernel.clone(), spec.bounds)
    }

    /// `S(a, b) = ∫_a^b B(z)/z dz`.
    pub fn size_integral(&self, a: f64, b: f64) -> f64 {
        self.rate.size_integral(a, b)
    }

    /// Density of the child's birth size `x'` given a parent born at size
    /// `x` with growth rate `v`.
    pub fn size_density(&self, x: f64, v: f64, x_next: f64) -> f64 {
        if x_next < 0.5 * x || x_next <= 0.0 {
            return 0.0;
        }
        let hazard = self.size_integral(x, 2.0 * x_next) / v;
        self.rate.eval(2.0 * x_next) / (v * x_next) * (-hazard).exp()
    }

    /// Child size beyond which the size density carries negligible mass.
    pub fn size_upper(&self, x: f64, v: f64) -> f64 {
        let mut hi = x.max(1e-300);
        while self.size_integral(x, 2.0 * hi) / v < TAIL_HAZARD {
            hi *= 2.0;
            if !hi.is_finite() {
                break;
            }
        }
        hi
    }

    /// `∫ size_density(x, v, x') dx'`.
    pub fn size_mass(&self, x: f64, v: f64) -> f64 {
        let lo = 0.5 * x;
        let hi = self.size_upper(x, v);
        let mut breaks: Vec<f64> = (0..=32).map(|k| lo * (hi / lo).powf(k as f64 / 32.0)).collect();
        if let DivisionRate::Tabulated { grid, .. } = &self.rate {
            breaks.extend(grid.iter().map(|g| 0.5 * g).filter(|g| *g > lo && *g < hi));
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        integrate_pieces(|y| self.size_density(x, v, y), &breaks, REL_TOL)
    }

    /// `∫ ρ(v, v') dv'` over the admissible range; 1 for an atom.
    pub fn growth_mass(&self, v: f64) -> f64 {
        if matches!(self.kernel, GrowthKernel::Dirac { .. }) {
            return 1.0;
        }
        let breaks = self.kernel.density_breaks(v, &self.bounds);
        integrate_pieces(
            |w| self.kernel.density(v, w, &self.bounds).unwrap_or(0.0),
            &breaks,
            REL_TOL,
        )
    }

    /// Total mass of the transition from `(x, v)`; 1 up to quadrature error.
    pub fn total_mass(&self, x: f64, v: f64) -> f64 {
        self.size_mass(x, v) * self.growth_mass(v)
    }
}

/// Joint transition density at `(x', v')` given `(x, v)`. For a Dirac
/// growth kernel the growth factor is 1 on the atom and 0 elsewhere.
pub fn transition_density(ev: &TransitionEvaluator, x: f64, v: f64, x_next: f64, v_next: f64) -> f64 {
    let growth = match ev.kernel {
        GrowthKernel::Dirac { rate } => {
            if v_next == rate {
                1.0
            } else {
                0.0
            }
        }
        _ => ev.kernel.density(v, v_next, &ev.bounds).unwrap_or(0.0),
    };
    if growth == 0.0 {
        return 0.0;
    }
    growth * ev.size_density(x, v, x_next)
}
