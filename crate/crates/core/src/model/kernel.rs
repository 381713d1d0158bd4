//! Growth-rate inheritance kernels, conditioned on the admissible range.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Maximum number of proposals before a conditioned draw gives up.
pub const REJECTION_CAP: u64 = 1_000_000;

/// Compact range `E = [e_min, e_max]` of admissible growth rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBounds {
    pub e_min: f64,
    pub e_max: f64,
}

impl GrowthBounds {
    pub fn new(e_min: f64, e_max: f64) -> Result<Self> {
        let bounds = GrowthBounds { e_min, e_max };
        bounds.validate()?;
        Ok(bounds)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_min.is_finite() && self.e_max.is_finite() && self.e_min > 0.0 && self.e_min <= self.e_max) {
            return Err(Error::invalid(format!(
                "growth bounds need 0 < e_min <= e_max, got [{}, {}]",
                self.e_min, self.e_max
            )));
        }
        Ok(())
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.e_min && v <= self.e_max
    }
}

/// A distribution of growth rates, used for root draws and independent resampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthLaw {
    Point { value: f64 },
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, std: f64 },
}

impl GrowthLaw {
    fn validate(&self, bounds: &GrowthBounds) -> Result<()> {
        match *self {
            GrowthLaw::Point { value } if !bounds.contains(value) => {
                Err(Error::invalid(format!("point growth rate {value} lies outside E")))
            }
            GrowthLaw::Uniform { lo, hi } if !(lo <= hi && hi >= bounds.e_min && lo <= bounds.e_max) => Err(
                Error::invalid(format!("uniform growth law [{lo}, {hi}] does not meet E")),
            ),
            GrowthLaw::Gaussian { std, .. } if !(std > 0.0 && std.is_finite()) => {
                Err(Error::invalid("gaussian growth law needs a positive std"))
            }
            _ => Ok(()),
        }
    }

    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            GrowthLaw::Point { value } => value,
            GrowthLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            GrowthLaw::Gaussian { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std * z
            }
        }
    }

    /// Draw conditioned on `bounds` by rejection.
    pub fn sample<R: Rng + ?Sized>(&self, bounds: &GrowthBounds, rng: &mut R) -> Result<f64> {
        if let GrowthLaw::Point { value } = *self {
            return Ok(value);
        }
        conditioned(|r| self.propose(r), bounds, f64::NAN, rng)
    }

    /// Density conditioned on `bounds`; `None` for a point mass.
    pub fn density(&self, v: f64, bounds: &GrowthBounds) -> Option<f64> {
        match *self {
            GrowthLaw::Point { .. } => None,
            GrowthLaw::Uniform { lo, hi } => {
                let a = lo.max(bounds.e_min);
                let b = hi.min(bounds.e_max);
                Some(if v >= a && v <= b { 1.0 / (b - a) } else { 0.0 })
            }
            GrowthLaw::Gaussian { mean, std } => Some(truncated_normal_density(v, mean, std, bounds)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthKernel {
    /// Every cell grows at `rate`.
    Dirac { rate: f64 },
    /// `v' = v + c (U - 1)` with `U` uniform on `[1 - alpha, 1 + alpha]` and
    /// `c` chosen so that the root-mean-square increment equals `scale`.
    UniformIncrement { alpha: f64, scale: f64 },
    /// `v' = v + std * N(0, 1)`.
    GaussianIncrement { std: f64 },
    /// `v'` drawn from `law` regardless of the parent.
    IndependentResample { law: GrowthLaw },
}

impl GrowthKernel {
    pub fn validate(&self, bounds: &GrowthBounds) -> Result<()> {
        match self {
            GrowthKernel::Dirac { rate } if !bounds.contains(*rate) => {
                Err(Error::invalid(format!("dirac growth rate {rate} lies outside E")))
            }
            GrowthKernel::UniformIncrement { alpha, scale } if !(*alpha > 0.0 && *scale > 0.0) => {
                Err(Error::invalid("uniform increment needs positive alpha and scale"))
            }
            GrowthKernel::GaussianIncrement { std } if !(*std > 0.0 && std.is_finite()) => {
                Err(Error::invalid("gaussian increment needs a positive std"))
            }
            GrowthKernel::IndependentResample { law } => law.validate(bounds),
            _ => Ok(()),
        }
    }

    /// Half-width of the (unconditioned) uniform increment.
    fn uniform_half_width(alpha: f64, scale: f64) -> f64 {
        // U - 1 has RMS alpha / sqrt(3); the dilation maps that to `scale`.
        let dilation = scale * 3f64.sqrt() / alpha;
        dilation * alpha
    }

    fn propose<R: Rng + ?Sized>(&self, parent: f64, rng: &mut R) -> f64 {
        match self {
            GrowthKernel::Dirac { rate } => *rate,
            GrowthKernel::UniformIncrement { alpha, scale } => {
                let dilation = scale * 3f64.sqrt() / alpha;
                let u = 1.0 - alpha + 2.0 * alpha * rng.random::<f64>();
                parent + dilation * (u - 1.0)
            }
            GrowthKernel::GaussianIncrement { std } => {
                let z: f64 = StandardNormal.sample(rng);
                parent + std * z
            }
            GrowthKernel::IndependentResample { law } => law.propose(rng),
        }
    }

    /// Draws a child growth rate from `ρ(parent, ·)` conditioned on `bounds`.
    pub fn sample<R: Rng + ?Sized>(&self, parent: f64, bounds: &GrowthBounds, rng: &mut R) -> Result<f64> {
        match self {
            GrowthKernel::Dirac { rate } => Ok(*rate),
            GrowthKernel::IndependentResample {
                law: GrowthLaw::Point { value },
            } => Ok(*value),
            _ => conditioned(|r| self.propose(parent, r), bounds, parent, rng),
        }
    }

    /// Density of `ρ(v, ·)` at `v_next` after conditioning; `None` for atoms.
    pub fn density(&self, v: f64, v_next: f64, bounds: &GrowthBounds) -> Option<f64> {
        match self {
            GrowthKernel::Dirac { .. } => None,
            GrowthKernel::UniformIncrement { alpha, scale } => {
                let half = Self::uniform_half_width(*alpha, *scale);
                let a = (v - half).max(bounds.e_min);
                let b = (v + half).min(bounds.e_max);
                Some(if v_next >= a && v_next <= b && b > a {
                    1.0 / (b - a)
                } else {
                    0.0
                })
            }
            GrowthKernel::GaussianIncrement { std } => Some(truncated_normal_density(v_next, v, *std, bounds)),
            GrowthKernel::IndependentResample { law } => law.density(v_next, bounds),
        }
    }

    /// Points where the conditioned density of `ρ(v, ·)` may jump.
    pub fn density_breaks(&self, v: f64, bounds: &GrowthBounds) -> Vec<f64> {
        let mut breaks = vec![bounds.e_min, bounds.e_max];
        match self {
            GrowthKernel::UniformIncrement { alpha, scale } => {
                let half = Self::uniform_half_width(*alpha, *scale);
                breaks.extend([v - half, v + half]);
            }
            GrowthKernel::IndependentResample {
                law: GrowthLaw::Uniform { lo, hi },
            } => breaks.extend([*lo, *hi]),
            _ => {}
        }
        breaks.retain(|b| bounds.contains(*b));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks
    }
}

fn conditioned<R: Rng + ?Sized, F: FnMut(&mut R) -> f64>(
    mut propose: F,
    bounds: &GrowthBounds,
    parent: f64,
    rng: &mut R,
) -> Result<f64> {
    for _ in 0..REJECTION_CAP {
        let v = propose(rng);
        if bounds.contains(v) {
            return Ok(v);
        }
    }
    Err(Error::RejectionBudgetExceeded {
        parent,
        attempts: REJECTION_CAP,
    })
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn truncated_normal_density(v: f64, mean: f64, std: f64, bounds: &GrowthBounds) -> f64 {
    if !bounds.contains(v) {
        return 0.0;
    }
    let mass = normal_cdf((bounds.e_max - mean) / std) - normal_cdf((bounds.e_min - mean) / std);
    let z = (v - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt() * mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn reference_bounds() -> GrowthBounds {
        GrowthBounds::new(0.2, 3.0).unwrap()
    }

    #[test]
    fn dirac_returns_its_rate() {
        let mut rng = rng_from_seed(1);
        let k = GrowthKernel::Dirac { rate: 1.0 };
        for parent in [0.3, 1.0, 2.9] {
            assert_eq!(k.sample(parent, &reference_bounds(), &mut rng).unwrap(), 1.0);
        }
    }

    #[test]
    fn uniform_increment_stays_in_range() {
        let bounds = reference_bounds();
        let k = GrowthKernel::UniformIncrement { alpha: 0.5, scale: 0.5 };
        let mut rng = rng_from_seed(2);
        for _ in 0..100_000 {
            let v = k.sample(1.5, &bounds, &mut rng).unwrap();
            assert!(bounds.contains(v));
        }
    }

    #[test]
    fn uniform_increment_rms_before_conditioning() {
        // far from the boundaries no conditioning happens
        let bounds = GrowthBounds::new(0.01, 100.0).unwrap();
        for alpha in [0.1, 0.5, 2.0] {
            let k = GrowthKernel::UniformIncrement { alpha, scale: 0.5 };
            let second_moment = quadrature::integrate_pieces(
                |w| (w - 50.0).powi(2) * k.density(50.0, w, &bounds).unwrap(),
                &k.density_breaks(50.0, &bounds),
                1e-12,
            );
            assert!((second_moment.sqrt() - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_increment_mean_matches_quadrature() {
        let bounds = reference_bounds();
        let k = GrowthKernel::GaussianIncrement { std: 0.5 };
        let oracle = quadrature::integrate(|w| w * k.density(1.5, w, &bounds).unwrap(), 0.2, 3.0, 1e-12);
        let mass = quadrature::integrate(|w| k.density(1.5, w, &bounds).unwrap(), 0.2, 3.0, 1e-12);
        assert!((mass - 1.0).abs() < 1e-9);
        let mut rng = rng_from_seed(3);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = k.sample(1.5, &bounds, &mut rng).unwrap();
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - oracle).abs() < 3.0 * se, "{mean} vs {oracle} (se {se})");
    }

    #[test]
    fn impossible_conditioning_exhausts_budget() {
        let bounds = GrowthBounds::new(10.0, 10.000_000_001).unwrap();
        let k = GrowthKernel::IndependentResample {
            law: GrowthLaw::Uniform { lo: 0.0, hi: 1e9 },
        };
        let err = k.sample(10.0, &bounds, &mut rng_from_seed(4)).unwrap_err();
        assert!(matches!(err, Error::RejectionBudgetExceeded { .. }));
    }

    #[test]
    fn bad_bounds_rejected() {
        assert!(GrowthBounds::new(0.0, 1.0).is_err());
        assert!(GrowthBounds::new(2.0, 1.0).is_err());
        assert!(GrowthKernel::Dirac { rate: 5.0 }.validate(&reference_bounds()).is_err());
    }

    fn any_kernel() -> impl Strategy<Value = GrowthKernel> {
        prop_oneof![
            (0.2f64..3.0).prop_map(|rate| GrowthKernel::Dirac { rate }),
            (0.05f64..2.0, 0.05f64..2.0).prop_map(|(alpha, scale)| GrowthKernel::UniformIncrement { alpha, scale }),
            (0.05f64..3.0).prop_map(|std| GrowthKernel::GaussianIncrement { std }),
            (0.1f64..2.0, 0.15f64..2.0).prop_map(|(lo, w)| GrowthKernel::IndependentResample {
                law: GrowthLaw::Uniform { lo, hi: lo + w }
            }),
            (0.0f64..3.0, 0.1f64..2.0).prop_map(|(mean, std)| GrowthKernel::IndependentResample {
                law: GrowthLaw::Gaussian { mean, std }
            }),
        ]
    }

    proptest! {
        #[test]
        fn samples_always_within_bounds(kernel in any_kernel(), parent in 0.2f64..3.0, seed in any::<u64>()) {
            let bounds = reference_bounds();
            let mut rng = rng_from_seed(seed);
            for _ in 0..50 {
                let v = kernel.sample(parent, &bounds, &mut rng).unwrap();
                prop_assert!(bounds.contains(v));
            }
        }
    }
}
