//! Division rates and the lifetime hazard they induce.
//!
//! A cell born with size `x` and growth rate `v` divides at the first time `t`
//! where the cumulative hazard `F(t) = ∫₀ᵗ B(x e^{vs}) ds` reaches an
//! independent unit-exponential draw. Substituting `z = x e^{vs}` gives
//! `F(t) = v⁻¹ ∫_x^{x e^{vt}} B(z)/z dz`, and every integral below is computed
//! in log-size so that large horizons never overflow.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default horizon bounding the hazard inversion bracket.
pub const DEFAULT_T_MAX: f64 = 1e4;

/// Absolute/relative tolerance on `|F(t) - e|` after inversion.
pub const INVERSION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivisionRate {
    /// `B(x) = coefficient * x^exponent`.
    PowerLaw { coefficient: f64, exponent: f64 },
    /// Piecewise-linear table; clamps to the boundary values outside `grid`.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

impl DivisionRate {
    pub fn power_law(coefficient: f64, exponent: f64) -> Result<Self> {
        let rate = DivisionRate::PowerLaw { coefficient, exponent };
        rate.validate()?;
        Ok(rate)
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let rate = DivisionRate::Tabulated { grid, values };
        rate.validate()?;
        Ok(rate)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DivisionRate::PowerLaw { coefficient, exponent } => {
                if !(coefficient.is_finite() && *coefficient > 0.0) {
                    return Err(Error::invalid(format!(
                        "power-law coefficient must be positive, got {coefficient}"
                    )));
                }
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::invalid(format!(
                        "power-law exponent must be positive, got {exponent}"
                    )));
                }
            }
            DivisionRate::Tabulated { grid, values } => {
                if grid.is_empty() || grid.len() != values.len() {
                    return Err(Error::invalid(format!(
                        "tabulated rate needs matching non-empty grid and values ({} vs {})",
                        grid.len(),
                        values.len()
                    )));
                }
                if grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
                    return Err(Error::invalid("tabulated grid must be finite and positive"));
                }
                if grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("tabulated grid must be strictly increasing"));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::invalid("tabulated values must be finite and nonnegative"));
                }
            }
        }
        Ok(())
    }

    /// Evaluates `B(x)`. `B(0) = 0` for every form; a table clamps to its
    /// boundary values for `0 < x < grid[0]` and `x > grid[last]`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            DivisionRate::PowerLaw { coefficient, exponent } => coefficient * x.powf(*exponent),
            DivisionRate::Tabulated { grid, values } => {
                let last = grid.len() - 1;
                if x <= grid[0] {
                    return values[0];
                }
                if x >= grid[last] {
                    return values[last];
                }
                let k = grid.partition_point(|&g| g <= x) - 1;
                let w = (x - grid[k]) / (grid[k + 1] - grid[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    /// `∫ B(z)/z dz` over `z ∈ [e^{ln_lo}, e^{ln_hi}]`, i.e. `∫ B(e^u) du` in log-size.
    /// `ln_lo` may be `-inf` (integral from zero) and `ln_hi` may be `+inf`.
    pub fn log_size_integral(&self, ln_lo: f64, ln_hi: f64) -> f64 {
        if ln_hi <= ln_lo {
            return 0.0;
        }
        match self {
            DivisionRate::PowerLaw { coefficient, exponent } => {
                let hi = (exponent * ln_hi).exp();
                let lo = (exponent * ln_lo).exp();
                coefficient / exponent * (hi - lo)
            }
            DivisionRate::Tabulated { grid, values } => {
                let last = grid.len() - 1;
                let ln_first = grid[0].ln();
                let ln_last = grid[last].ln();
                let mut total = 0.0;
                // below the table
                let hi = ln_hi.min(ln_first);
                if hi > ln_lo && values[0] > 0.0 {
                    total += values[0] * (hi - ln_lo);
                }
                // interior linear pieces: B(z) = p + q z
                if ln_hi > ln_first && ln_lo < ln_last {
                    let a = ln_lo.exp();
                    let b = ln_hi.exp();
                    for k in 0..last {
                        let z1 = a.max(grid[k]);
                        let z2 = b.min(grid[k + 1]);
                        if z2 <= z1 {
                            continue;
                        }
                        let q = (values[k + 1] - values[k]) / (grid[k + 1] - grid[k]);
                        let p = values[k] - q * grid[k];
                        total += p * (z2 / z1).ln() + q * (z2 - z1);
                    }
                }
                // above the table
                let lo = ln_lo.max(ln_last);
                if ln_hi > lo && values[last] > 0.0 {
                    total += values[last] * (ln_hi - lo);
                }
                total
            }
        }
    }

    /// `∫_a^b B(z)/z dz` for `0 ≤ a ≤ b`.
    pub fn size_integral(&self, a: f64, b: f64) -> f64 {
        self.log_size_integral(a.ln(), b.ln())
    }

    /// Cumulative hazard `F_{x,v}(t) = ∫₀ᵗ B(x e^{vs}) ds`.
    pub fn cumulative_hazard(&self, x: f64, v: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            DivisionRate::PowerLaw { coefficient, exponent } => {
                coefficient * x.powf(*exponent) * (exponent * v * t).exp_m1() / (exponent * v)
            }
            DivisionRate::Tabulated { .. } => {
                let ln_x = x.ln();
                self.log_size_integral(ln_x, ln_x + v * t) / v
            }
        }
    }

    /// Solves `F_{x,v}(t) = e` for `t`.
    pub fn invert_hazard(&self, x: f64, v: f64, e: f64, t_max: f64) -> Result<f64> {
        if e <= 0.0 {
            return Ok(0.0);
        }
        match self {
            DivisionRate::PowerLaw { coefficient, exponent } => {
                let scale = coefficient * x.powf(*exponent);
                let t = (exponent * v * e / scale).ln_1p() / (exponent * v);
                if t.is_finite() {
                    Ok(t)
                } else {
                    Err(Error::NonDivergentHazard {
                        size: x,
                        growth: v,
                        target: e,
                        t_max,
                    })
                }
            }
            DivisionRate::Tabulated { .. } => self.invert_by_bracketing(x, v, e, t_max),
        }
    }

    fn invert_by_bracketing(&self, x: f64, v: f64, e: f64, t_max: f64) -> Result<f64> {
        let f = |t: f64| self.cumulative_hazard(x, v, t);
        let tol = INVERSION_TOL * e.max(1.0);
        let mut lo = 0.0;
        let mut hi = 1.0_f64.min(t_max);
        while f(hi) < e {
            if hi >= t_max {
                return Err(Error::NonDivergentHazard {
                    size: x,
                    growth: v,
                    target: e,
                    t_max,
                });
            }
            lo = hi;
            hi = (2.0 * hi).min(t_max);
        }
        // bisection to a tight bracket, then Newton polish inside it
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let ft = f(t);
            if (ft - e).abs() <= 1e-3 * tol {
                return Ok(t);
            }
            if ft < e {
                lo = t;
            } else {
                hi = t;
            }
            if hi - lo <= 1e-6 * hi.max(1e-300) {
                break;
            }
            t = 0.5 * (lo + hi);
        }
        for _ in 0..50 {
            let ft = f(t);
            let resid = ft - e;
            if resid.abs() <= 1e-3 * tol {
                break;
            }
            if resid < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let slope = self.eval(x * (v * t).exp());
            let newton = t - resid / slope;
            t = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        Ok(t)
    }

    /// Upper bound of `B` on the size interval `[lo, hi]`.
    pub fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        match self {
            DivisionRate::PowerLaw { .. } => self.eval(hi),
            DivisionRate::Tabulated { grid, values } => grid
                .iter()
                .zip(values)
                .filter(|(g, _)| **g > lo && **g < hi)
                .map(|(_, v)| *v)
                .fold(self.eval(lo).max(self.eval(hi)), f64::max),
        }
    }
}

/// How lifetimes are drawn from the hazard.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifetimeSampler {
    /// `ζ = F⁻¹(e)` with `e` unit exponential.
    #[default]
    InverseHazard,
    /// Rejection (thinning) against a piecewise-constant hazard envelope.
    Rejection,
}

/// Draws a lifetime for a cell born at size `x` with growth rate `v`.
pub fn sample_lifetime<R: Rng + ?Sized>(
    rate: &DivisionRate,
    x: f64,
    v: f64,
    sampler: LifetimeSampler,
    t_max: f64,
    rng: &mut R,
) -> Result<f64> {
    match sampler {
        LifetimeSampler::InverseHazard => {
            let e: f64 = Exp1.sample(rng);
            rate.invert_hazard(x, v, e, t_max)
        }
        LifetimeSampler::Rejection => sample_lifetime_thinning(rate, x, v, t_max, rng),
    }
}

fn sample_lifetime_thinning<R: Rng + ?Sized>(
    rate: &DivisionRate,
    x: f64,
    v: f64,
    t_max: f64,
    rng: &mut R,
) -> Result<f64> {
    // windows over which the size grows by 10%
    let window = 1.1_f64.ln() / v;
    let mut start = 0.0;
    while start < t_max {
        let end = start + window;
        let bound = rate.sup_on(x * (v * start).exp(), x * (v * end).exp());
        if bound > 0.0 {
            let mut t = start;
            loop {
                let step: f64 = Exp1.sample(rng);
                t += step / bound;
                if t >= end {
                    break;
                }
                let u: f64 = rng.random();
                if u * bound <= rate.eval(x * (v * t).exp()) {
                    return Ok(t);
                }
            }
        }
        start = end;
    }
    Err(Error::NonDivergentHazard {
        size: x,
        growth: v,
        target: f64::NAN,
        t_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;
    use std::f64::consts::E;

    fn square() -> DivisionRate {
        DivisionRate::power_law(1.0, 2.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(square().eval(0.0), 0.0);
        assert_eq!(square().eval(2.0), 4.0);
        let table = DivisionRate::tabulated(vec![1.0, 2.0], vec![1.0, 4.0]).unwrap();
        assert!((table.eval(1.5) - 2.5).abs() < 1e-15);
        assert_eq!(table.eval(0.5), 1.0);
        assert_eq!(table.eval(7.0), 4.0);
        assert_eq!(table.eval(0.0), 0.0);
    }

    #[test]
    fn validation_rejects_bad_tables() {
        assert!(DivisionRate::tabulated(vec![2.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(DivisionRate::tabulated(vec![1.0], vec![-1.0]).is_err());
        assert!(DivisionRate::tabulated(vec![], vec![]).is_err());
        assert!(DivisionRate::power_law(0.0, 2.0).is_err());
    }

    #[test]
    fn hazard_examples() {
        let b = square();
        assert_eq!(b.cumulative_hazard(1.0, 1.0, 0.0), 0.0);
        let expected = (E - 1.0) / 2.0;
        assert!((b.cumulative_hazard(1.0, 1.0, 0.5) - expected).abs() < 1e-14);
        assert!((b.cumulative_hazard(2.0, 1.0, 0.5) - 4.0 * expected).abs() < 1e-13);
        // quadrature cross-check
        let quad = quadrature::integrate(|s: f64| b.eval(2.0 * s.exp()), 0.0, 0.5, 1e-12);
        assert!((quad - 3.436_563_656_918_09).abs() < 1e-10);
    }

    #[test]
    fn inversion_examples() {
        let b = square();
        let t = b.invert_hazard(1.0, 1.0, (E - 1.0) / 2.0, DEFAULT_T_MAX).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        let tiny = b.invert_hazard(1.0, 1.0, 1e-12, DEFAULT_T_MAX).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-11);
        let flat = DivisionRate::tabulated(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let t = flat.invert_hazard(1.0, 1.0, 2.0, DEFAULT_T_MAX).unwrap();
        assert!((t - 2.0).abs() < 1e-9);
    }

    #[test]
    fn vanishing_table_fails_to_bracket() {
        let dead = DivisionRate::tabulated(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            dead.invert_hazard(1.0, 1.0, 1.0, 100.0),
            Err(Error::NonDivergentHazard { .. })
        ));
    }

    #[test]
    fn tabulated_hazard_matches_quadrature() {
        let table = DivisionRate::tabulated(vec![0.5, 1.0, 2.0, 4.0], vec![0.0, 1.0, 3.0, 10.0]).unwrap();
        for &(x, v, t) in &[(0.3, 1.0, 2.0), (1.2, 0.5, 1.0), (3.0, 2.0, 0.7), (0.9, 0.2, 10.0)] {
            let exact = table.cumulative_hazard(x, v, t);
            let quad = quadrature::integrate_pieces(
                |s: f64| table.eval(x * (v * s).exp()),
                &breaks_in_time(&[0.5, 1.0, 2.0, 4.0], x, v, t),
                1e-12,
            );
            assert!((exact - quad).abs() <= 1e-9 * exact.max(1.0), "{exact} vs {quad}");
            let back = table.invert_hazard(x, v, exact, DEFAULT_T_MAX).unwrap();
            assert!((back - t).abs() < 1e-8 * t.max(1.0));
        }
    }

    fn breaks_in_time(grid: &[f64], x: f64, v: f64, t: f64) -> Vec<f64> {
        let mut b = vec![0.0];
        b.extend(grid.iter().map(|g| (g / x).ln() / v).filter(|s| *s > 0.0 && *s < t));
        b.push(t);
        b
    }

    #[test]
    fn sup_bounds_include_knots() {
        let table = DivisionRate::tabulated(vec![1.0, 2.0, 3.0], vec![1.0, 5.0, 2.0]).unwrap();
        assert_eq!(table.sup_on(1.5, 2.5), 5.0);
        assert_eq!(square().sup_on(1.0, 3.0), 9.0);
    }
}
