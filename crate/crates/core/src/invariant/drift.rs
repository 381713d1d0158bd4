use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassParams, DivisionRate, GrowthBounds};
use crate::quadrature::{integrate_pieces, REL_TOL};

/// Largest `ln V` that still fits in a double.
pub const LN_MAX: f64 = 709.0;

/// Allowance for rounding when the drift bound is attained exactly.
pub const DRIFT_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub params: ClassParams,
    pub delta: f64,
    /// `sup_{x ≥ r, v} P_B V / V`.
    pub sup_ratio: f64,
    /// `sup_{x < r, v} P_B V`.
    pub small_set_bound: f64,
    pub x_grid: Vec<f64>,
    /// `max_v P_B V / V` at each grid point; infinite (null in JSON) where
    /// the integral diverges.
    pub ratios: Vec<f64>,
    pub pass: bool,
}

/// `ln(P_B V)(x, v)` with `V(x) = exp(m x^λ/(e_min λ))`. The result does
/// not depend on the growth kernel since `V` ignores the growth rate.
pub fn log_drift(params: &ClassParams, rate: &DivisionRate, bounds: &GrowthBounds, x: f64, v: f64) -> f64 {
    let ln_v = |y: f64| params.log_lyapunov(y, bounds);
    // Log-integrand in the child size y ≥ x/2.
    let g = |y: f64| {
        let b = rate.eval(2.0 * y);
        if b <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (b / (v * y)).ln() - rate.size_integral(x, 2.0 * y) / v + ln_v(y)
    };
    let lo = 0.5 * x;
    // Scan outwards for the peak and for the point where the integrand is
    // e^{-60} below it. An integrand still rising far out means P_B V = ∞,
    // which happens once v exceeds 2^λ e_min for B close to m x^λ.
    let mut peak = g(lo).max(g(lo * 1.0001));
    let mut hi = lo.max(1e-3);
    loop {
        hi *= 1.25;
        let gh = g(hi);
        if gh > peak {
            peak = gh;
        } else if gh < peak - 60.0 {
            break;
        }
        if hi > 1e12 || gh == f64::INFINITY {
            return f64::INFINITY;
        }
    }
    let breaks: Vec<f64> = (0..=64).map(|k| lo + (hi - lo) * k as f64 / 64.0).collect();
    let scaled = integrate_pieces(|y| (g(y) - peak).exp(), &breaks, REL_TOL);
    peak + scaled.ln()
}

/// Evaluates the drift ratio on `points` sizes spread over `(0, x_max]`
/// (always including `r`) and `v ∈ {e_min, …, e_max}`.
pub fn verify_drift(
    params: &ClassParams,
    rate: &DivisionRate,
    bounds: &GrowthBounds,
    x_max: f64,
    points: usize,
) -> Result<DriftReport> {
    params.validate()?;
    rate.validate()?;
    bounds.validate()?;
    if points < 2 || !(x_max > params.r) {
        return Err(Error::invalid(format!(
            "drift grid needs at least 2 points and x_max > r = {}",
            params.r
        )));
    }
    // The child sizes reach 2 x_max at most where the integrand matters; the
    // requested grid itself must keep V finite.
    let requested = params.log_lyapunov(x_max, bounds);
    if requested > LN_MAX {
        let truncation = (LN_MAX * bounds.e_min * params.lambda / params.m).powf(1.0 / params.lambda);
        return Err(Error::QuadratureOverflow {
            truncation,
            requested: x_max,
        });
    }
    let mut x_grid: Vec<f64> = (1..=points).map(|k| x_max * k as f64 / points as f64).collect();
    x_grid.push(params.r);
    x_grid.sort_by(f64::total_cmp);
    x_grid.dedup();
    let vs: Vec<f64> = if bounds.e_min == bounds.e_max {
        vec![bounds.e_min]
    } else {
        (0..5)
            .map(|k| bounds.e_min + (bounds.e_max - bounds.e_min) * k as f64 / 4.0)
            .collect()
    };
    let delta = params.delta(bounds);
    let (mut sup_ratio, mut small_set_bound) = (0.0f64, 0.0f64);
    let mut ratios = Vec::with_capacity(x_grid.len());
    for &x in &x_grid {
        let ln_v = params.log_lyapunov(x, bounds);
        let worst = vs
            .iter()
            .map(|&v| log_drift(params, rate, bounds, x, v))
            .fold(f64::NEG_INFINITY, f64::max);
        let ratio = (worst - ln_v).exp();
        ratios.push(ratio);
        if x >= params.r {
            sup_ratio = sup_ratio.max(ratio);
        } else {
            small_set_bound = small_set_bound.max(worst.exp());
        }
    }
    Ok(DriftReport {
        params: *params,
        delta,
        sup_ratio,
        small_set_bound,
        x_grid,
        ratios,
        pass: sup_ratio <= delta * (1.0 + DRIFT_SLACK),
    })
}
