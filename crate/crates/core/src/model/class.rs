//! Numerical membership checks for the admissible class of division rates.

use serde::{Deserialize, Serialize};

use super::kernel::GrowthBounds;
use super::rate::DivisionRate;
use super::Scheme;
use crate::error::{Error, Result};

/// Class parameters `λ` and `(r, m, ℓ, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub lambda: f64,
    pub r: f64,
    pub m: f64,
    pub ell: f64,
    #[serde(rename = "L")]
    pub big_l: f64,
}

impl ClassParams {
    pub fn new(lambda: f64, r: f64, m: f64, ell: f64, big_l: f64) -> Result<Self> {
        let params = ClassParams {
            lambda,
            r,
            m,
            ell,
            big_l,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda, self.r, self.m, self.ell, self.big_l];
        if all.iter().all(|p| p.is_finite() && *p > 0.0) {
            Ok(())
        } else {
            Err(Error::invalid(format!("class parameters must be positive: {self:?}")))
        }
    }

    /// Contraction proxy `δ = (1 - 2^{-λ})⁻¹ exp(-(1 - 2^{-λ}) m r^λ / (e_max λ))`.
    pub fn delta(&self, bounds: &GrowthBounds) -> f64 {
        let q = 1.0 - (-self.lambda).exp2();
        (-q * self.m * self.r.powf(self.lambda) / (bounds.e_max * self.lambda)).exp() / q
    }

    /// Lyapunov exponent `m x^λ / (e_min λ)`, i.e. `ln V(x)`.
    pub fn log_lyapunov(&self, x: f64, bounds: &GrowthBounds) -> f64 {
        self.m * x.powf(self.lambda) / (bounds.e_min * self.lambda)
    }
}

/// Span of the log-grid `[r, POLY_SPAN * r]` on which `B(x) >= m x^λ` is checked.
pub const POLY_SPAN: f64 = 1e3;
const POLY_POINTS: usize = 2001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub scheme: Scheme,
    /// `∫₀^{r/2} x⁻¹ B(2x) dx`, required `<= L`.
    pub small_size_integral: f64,
    pub small_size_pass: bool,
    /// `∫_{r/2}^{r} x⁻¹ B(2x) dx`, required `>= ℓ`.
    pub mid_size_integral: f64,
    pub mid_size_pass: bool,
    /// Minimum of `B(x) / x^λ` on the log-grid over `[r, x_max]`, required `>= m`.
    pub min_growth_ratio: f64,
    pub poly_x_max: f64,
    pub poly_pass: bool,
    pub delta: f64,
    /// 1 for the sparse scheme, 1/2 for the full tree.
    pub delta_threshold: f64,
    pub delta_pass: bool,
    /// The spectral-radius condition of the full-tree case is never verified.
    pub spectral_radius_verified: bool,
}

impl ClassReport {
    pub fn passes(&self) -> bool {
        self.small_size_pass && self.mid_size_pass && self.poly_pass && self.delta_pass
    }
}

pub fn check_class_membership(
    params: &ClassParams,
    rate: &DivisionRate,
    bounds: &GrowthBounds,
    scheme: Scheme,
) -> ClassReport {
    let r = params.r;
    // x⁻¹B(2x)dx = z⁻¹B(z)dz with z = 2x
    let small = rate.size_integral(0.0, r);
    let mid = rate.size_integral(r, 2.0 * r);
    let x_max = POLY_SPAN * r;
    let step = (x_max / r).ln() / (POLY_POINTS - 1) as f64;
    let min_ratio = (0..POLY_POINTS)
        .map(|i| {
            let x = r * (step * i as f64).exp();
            rate.eval(x) / x.powf(params.lambda)
        })
        .fold(f64::INFINITY, f64::min);
    let delta = params.delta(bounds);
    let threshold = match scheme {
        Scheme::Sparse => 1.0,
        Scheme::Full => 0.5,
    };
    ClassReport {
        scheme,
        small_size_integral: small,
        small_size_pass: small <= params.big_l,
        mid_size_integral: mid,
        mid_size_pass: mid >= params.ell,
        min_growth_ratio: min_ratio,
        poly_x_max: x_max,
        poly_pass: min_ratio >= params.m,
        delta,
        delta_threshold: threshold,
        delta_pass: delta < threshold,
        spectral_radius_verified: false,
    }
}
