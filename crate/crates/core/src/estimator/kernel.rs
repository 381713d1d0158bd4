//! Smoothing kernels with compact support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::normal_cdf;
use crate::quadrature::{integrate, REL_TOL};

/// Half-width of the truncated Gaussian, in standard deviations.
pub const GAUSSIAN_TRUNCATION: f64 = 5.0;

/// Highest supported order for the polynomial family.
pub const MAX_ORDER: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum KernelSpec {
    /// Standard normal density restricted to `[-5, 5]` and renormalized.
    Gaussian,
    /// Polynomial kernel on `[-1, 1]` reproducing polynomials up to degree
    /// `order`: the Legendre projection onto that space, evaluated at 0.
    CompactOrder { order: u32 },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Gaussian
    }
}

fn legendre_all(x: f64, order: u32, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if order >= 1 {
        out.push(x);
    }
    for j in 1..order as usize {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0) * x * out[j] - jf * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian => Ok(()),
            KernelSpec::CompactOrder { order } if (1..=MAX_ORDER).contains(&order) => Ok(()),
            KernelSpec::CompactOrder { order } => Err(Error::invalid(format!(
                "kernel order must lie in 1..={MAX_ORDER}, got {order}"
            ))),
        }
    }

    /// `K` vanishes outside `[-support, support]`.
    pub fn support(&self) -> f64 {
        match self {
            KernelSpec::Gaussian => GAUSSIAN_TRUNCATION,
            KernelSpec::CompactOrder { .. } => 1.0,
        }
    }

    /// Number of vanishing moments beyond the zeroth.
    pub fn order(&self) -> u32 {
        match *self {
            KernelSpec::Gaussian => 1,
            KernelSpec::CompactOrder { order } => order,
        }
    }

    /// Materializes the kernel for repeated evaluation.
    pub fn build(&self) -> Kernel {
        match *self {
            KernelSpec::Gaussian => {
                let mass = 1.0 - 2.0 * normal_cdf(-GAUSSIAN_TRUNCATION);
                Kernel::Gaussian {
                    scale: 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * mass),
                }
            }
            KernelSpec::CompactOrder { order } => {
                let mut p0 = Vec::new();
                legendre_all(0.0, order, &mut p0);
                let coefficients = p0
                    .iter()
                    .enumerate()
                    .map(|(j, p)| (2.0 * j as f64 + 1.0) / 2.0 * p)
                    .collect();
                Kernel::Legendre { coefficients }
            }
        }
    }

    /// `∫ x^k K(x) dx`.
    pub fn moment(&self, k: u32) -> f64 {
        let kernel = self.build();
        let s = self.support();
        integrate(|x| x.powi(k as i32) * kernel.eval(x), -s, s, REL_TOL)
    }

    /// Largest deviation of the moments `0..=order` from `(1, 0, …, 0)`.
    pub fn moment_defect(&self) -> f64 {
        (0..=self.order())
            .map(|k| (self.moment(k) - if k == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Gaussian { scale: f64 },
    Legendre { coefficients: Vec<f64> },
}

impl Kernel {
    pub fn support(&self) -> f64 {
        match self {
            Kernel::Gaussian { .. } => GAUSSIAN_TRUNCATION,
            Kernel::Legendre { .. } => 1.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Kernel::Gaussian { scale } => {
                if x.abs() > GAUSSIAN_TRUNCATION {
                    0.0
                } else {
                    scale * (-0.5 * x * x).exp()
                }
            }
            Kernel::Legendre { coefficients } => {
                if x.abs() > 1.0 {
                    return 0.0;
                }
                let (mut p_prev, mut p) = (1.0, x);
                let mut sum = coefficients[0];
                for (j, c) in coefficients.iter().enumerate().skip(1) {
                    if j > 1 {
                        let jf = (j - 1) as f64;
                        let next = ((2.0 * jf + 1.0) * x * p - jf * p_prev) / (jf + 1.0);
                        p_prev = p;
                        p = next;
                    }
                    sum += c * p;
                }
                sum
            }
        }
    }

    /// `K_h(z) = K(z/h)/h`.
    #[inline]
    pub fn eval_scaled(&self, z: f64, h: f64) -> f64 {
        self.eval(z / h) / h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_peak() {
        let k = KernelSpec::Gaussian.build();
        let expected = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((k.eval(0.0) - expected).abs() < 1e-6);
        assert_eq!(k.eval(5.0001), 0.0);
        assert!(k.eval(4.999) > 0.0);
    }

    #[test]
    fn moments_vanish() {
        let mut kernels = vec![KernelSpec::Gaussian];
        kernels.extend((1..=8).map(|order| KernelSpec::CompactOrder { order }));
        for k in kernels {
            assert!(k.moment_defect() < 1e-8, "{k:?}: {}", k.moment_defect());
        }
    }

    #[test]
    fn order_two_is_signed() {
        // Higher-order kernels must take negative values somewhere.
        let k = KernelSpec::CompactOrder { order: 2 }.build();
        assert!(k.eval(0.95) < 0.0);
        assert!((k.eval(0.0) - 9.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn order_one_is_uniform() {
        let k = KernelSpec::CompactOrder { order: 1 }.build();
        assert_eq!(k.eval(0.3), 0.5);
        assert_eq!(k.eval(-1.0), 0.5);
    }

    #[test]
    fn rejects_order_zero() {
        assert!(KernelSpec::CompactOrder { order: 0 }.validate().is_err());
    }
}
