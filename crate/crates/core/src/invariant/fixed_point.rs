use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::CurveOnGrid;
use crate::model::DivisionRate;
use crate::quadrature::trapezoid;

/// Uniform grid `x_j = j dx` on `[0, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeGrid {
    pub dx: f64,
    pub x_max: f64,
}

impl SizeGrid {
    pub fn new(dx: f64, x_max: f64) -> Result<Self> {
        let g = SizeGrid { dx, x_max };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx.is_finite() && self.dx > 0.0 && self.x_max.is_finite() && self.x_max > self.dx) {
            return Err(Error::invalid(format!(
                "grid needs 0 < dx < x_max, got dx={} x_max={}",
                self.dx, self.x_max
            )));
        }
        Ok(())
    }

    /// Number of intervals.
    pub fn cells(&self) -> usize {
        (self.x_max / self.dx).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantSolution {
    /// Size marginal on `x_j = j dx`, integrating to 1.
    pub nu: CurveOnGrid,
    /// L1 distance between the returned density and its image by the chain.
    pub residual: f64,
    pub iterations: usize,
}

impl InvariantSolution {
    /// `∫_a^b ν` for the piecewise-linear interpolant; zero outside the grid.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.primitive(b) - self.primitive(a)
    }

    fn primitive(&self, x: f64) -> f64 {
        let nu = &self.nu;
        let dx = nu.dx;
        let s = ((x - nu.x0) / dx).clamp(0.0, (nu.len() - 1) as f64);
        let j = (s.floor() as usize).min(nu.len() - 2);
        let whole: f64 = nu.values[..=j].windows(2).map(|w| 0.5 * (w[0] + w[1]) * dx).sum();
        let t = (s - j as f64) * dx;
        let slope = (nu.values[j + 1] - nu.values[j]) / dx;
        whole + nu.values[j] * t + 0.5 * slope * t * t
    }
}

pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const FIXED_POINT_MAX_ITER: usize = 100_000;

fn l1(a: &[f64], b: &[f64], dx: f64) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(p, q)| (p - q).abs()).collect();
    trapezoid(&diff, dx)
}

/// Discretized kernel `M[i][j] = w_j B(2x_i)/(τx_i) e^{-S(x_j, 2x_i)/τ}` with
/// trapezoid weights `w_j` over `x_j ≤ min(2x_i, x_max)`.
fn kernel_matrix(rate: &DivisionRate, tau: f64, grid: &SizeGrid) -> Vec<Vec<f64>> {
    let n = grid.cells();
    let dx = grid.dx;
    (0..=n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n + 1];
            if i == 0 {
                return row;
            }
            let xi = i as f64 * dx;
            let front = rate.eval(2.0 * xi) / (tau * xi);
            let last = (2 * i).min(n);
            for (j, cell) in row.iter_mut().enumerate().take(last + 1) {
                let xj = j as f64 * dx;
                let w = if j == 0 || j == last { 0.5 * dx } else { dx };
                *cell = w * front * (-rate.size_integral(xj, 2.0 * xi) / tau).exp();
            }
            row
        })
        .collect()
}

fn apply(matrix: &[Vec<f64>], nu: &[f64]) -> Vec<f64> {
    matrix
        .par_iter()
        .map(|row| row.iter().zip(nu).map(|(m, v)| m * v).sum())
        .collect()
}

fn normalize(nu: &mut [f64], dx: f64) {
    let mass = trapezoid(nu, dx);
    nu.iter_mut().for_each(|v| *v /= mass);
}

/// Power iteration `ν ← ν P_B` for a constant growth rate `τ`, started from
/// the uniform density and renormalized after every step.
pub fn invariant_fixed_point(rate: &DivisionRate, tau: f64, grid: &SizeGrid, tol: f64) -> Result<InvariantSolution> {
    rate.validate()?;
    grid.validate()?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("growth rate must be positive, got {tau}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let n = grid.cells();
    let dx = grid.dx;
    let matrix = kernel_matrix(rate, tau, grid);
    let mut nu = vec![1.0; n + 1];
    normalize(&mut nu, dx);
    let mut change = f64::INFINITY;
    for iteration in 1..=FIXED_POINT_MAX_ITER {
        let mut next = apply(&matrix, &nu);
        normalize(&mut next, dx);
        change = l1(&next, &nu, dx);
        nu = next;
        if change < tol {
            let mut image = apply(&matrix, &nu);
            normalize(&mut image, dx);
            let residual = l1(&image, &nu, dx);
            return Ok(InvariantSolution {
                nu: CurveOnGrid::new(0.0, dx, nu)?,
                residual,
                iterations: iteration,
            });
        }
        if !change.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: FIXED_POINT_MAX_ITER,
        residual: change,
    })
}

/// `B(y) = (τy/2) ν(y/2) / ∫_{y/2}^y ν` at `y_i = y0 + i dy`, `i < m`.
/// Points whose denominator is not above `1e-14` are reported together.
pub fn reconstruct_b_from_invariant(
    sol: &InvariantSolution,
    tau: f64,
    y0: f64,
    dy: f64,
    m: usize,
) -> Result<CurveOnGrid> {
    let x_end = sol.nu.x(sol.nu.len() - 1);
    let y_last = y0 + (m.max(1) - 1) as f64 * dy;
    if !(y0 > 0.0) || y_last > x_end * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "reconstruction grid [{y0}, {y_last}] must lie in (0, {x_end}]"
        )));
    }
    let mut values = Vec::with_capacity(m);
    let mut bad = Vec::new();
    for i in 0..m {
        let y = y0 + i as f64 * dy;
        let denom = sol.integral(0.5 * y, y);
        if !(denom > 1e-14) {
            bad.push(y);
            values.push(0.0);
            continue;
        }
        values.push(0.5 * tau * y * sol.nu.interpolate(0.5 * y) / denom);
    }
    if !bad.is_empty() {
        return Err(Error::DegenerateDenominator { points: bad });
    }
    CurveOnGrid::new(y0, dy, values)
}
