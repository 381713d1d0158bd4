//! Model parameterization: division rate, growth-rate kernel, admissible
//! growth range and the law of the root cell.

mod class;
mod kernel;
mod rate;

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use class::{check_class_membership, ClassParams, ClassReport, POLY_SPAN};
pub(crate) use kernel::normal_cdf;
pub use kernel::{GrowthBounds, GrowthKernel, GrowthLaw, REJECTION_CAP};
pub use rate::{sample_lifetime, DivisionRate, LifetimeSampler, DEFAULT_T_MAX, INVERSION_TOL};

use crate::error::{Error, Result};

/// Observation scheme on the genealogical tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// A single line of descent.
    Sparse,
    /// Every cell up to a given generation.
    Full,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Sparse => "sparse",
            Scheme::Full => "full",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(Scheme::Sparse),
            "full" => Ok(Scheme::Full),
            other => Err(Error::invalid(format!(
                "unknown scheme {other:?} (expected full or sparse)"
            ))),
        }
    }
}

/// Uniform size law on `[lo, hi]`; `lo == hi` is a point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeLaw {
    pub lo: f64,
    pub hi: f64,
}

impl SizeLaw {
    pub fn point(x: f64) -> Self {
        SizeLaw { lo: x, hi: x }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * rng.random::<f64>()
        }
    }
}

/// Law of the root `(ξ_∅, τ_∅)`: independent size and growth rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDistribution {
    pub size: SizeLaw,
    pub growth: GrowthLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub division_rate: DivisionRate,
    pub growth_kernel: GrowthKernel,
    pub bounds: GrowthBounds,
    pub initial: InitialDistribution,
}

impl ModelSpec {
    /// `B(x) = x²`, uniform increments with RMS 1/2, `E = [0.2, 3]`, root
    /// uniform on `[1/3, 3] × E`.
    pub fn reference() -> Self {
        ModelSpec {
            division_rate: DivisionRate::PowerLaw {
                coefficient: 1.0,
                exponent: 2.0,
            },
            growth_kernel: GrowthKernel::UniformIncrement { alpha: 0.5, scale: 0.5 },
            bounds: GrowthBounds { e_min: 0.2, e_max: 3.0 },
            initial: InitialDistribution {
                size: SizeLaw { lo: 1.0 / 3.0, hi: 3.0 },
                growth: GrowthLaw::Uniform { lo: 0.2, hi: 3.0 },
            },
        }
    }

    /// Same as the reference model but every cell grows at `rate`.
    pub fn constant_growth(division_rate: DivisionRate, rate: f64) -> Self {
        ModelSpec {
            division_rate,
            growth_kernel: GrowthKernel::Dirac { rate },
            bounds: GrowthBounds {
                e_min: rate,
                e_max: rate,
            },
            initial: InitialDistribution {
                size: SizeLaw { lo: 1.0 / 3.0, hi: 3.0 },
                growth: GrowthLaw::Point { value: rate },
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.division_rate.validate()?;
        self.bounds.validate()?;
        self.growth_kernel.validate(&self.bounds)?;
        let size = self.initial.size;
        if !(size.lo > 0.0 && size.lo <= size.hi && size.hi.is_finite()) {
            return Err(Error::invalid(format!(
                "initial size support [{}, {}] must lie in (0, inf)",
                size.lo, size.hi
            )));
        }
        match self.initial.growth {
            GrowthLaw::Point { value } if !self.bounds.contains(value) => {
                Err(Error::invalid("initial growth rate lies outside E"))
            }
            GrowthLaw::Uniform { lo, hi } if lo < self.bounds.e_min || hi > self.bounds.e_max || lo > hi => {
                Err(Error::invalid("initial growth support must lie inside E"))
            }
            GrowthLaw::Gaussian { std, .. } if !(std > 0.0) => {
                Err(Error::invalid("initial growth std must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Draws the root state.
    pub fn sample_root<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, f64)> {
        let size = self.initial.size.sample(rng);
        let growth = self.initial.growth.sample(&self.bounds, rng)?;
        Ok((size, growth))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips_through_json() {
        let spec = ModelSpec::reference();
        let back = ModelSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn json_schema_keys() {
        let text = r#"{
            "division_rate": {"tabulated": {"grid": [1.0, 2.0], "values": [1.0, 4.0]}},
            "growth_kernel": {"gaussian_increment": {"std": 0.3}},
            "bounds": {"e_min": 0.5, "e_max": 2.0},
            "initial": {"size": {"lo": 1.0, "hi": 2.0}, "growth": {"point": {"value": 1.0}}}
        }"#;
        let spec = ModelSpec::from_json(text).unwrap();
        assert_eq!(spec.growth_kernel, GrowthKernel::GaussianIncrement { std: 0.3 });
    }

    #[test]
    fn initial_growth_outside_bounds_rejected() {
        let mut spec = ModelSpec::reference();
        spec.initial.growth = GrowthLaw::Uniform { lo: 0.1, hi: 3.0 };
        assert!(spec.validate().is_err());
        let mut spec = ModelSpec::reference();
        spec.initial.size = SizeLaw { lo: 0.0, hi: 1.0 };
        assert!(spec.validate().is_err());
    }
}
