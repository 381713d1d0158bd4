use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BandwidthRule {
    Fixed {
        h: f64,
    },
    /// `h = n^exponent`.
    Power {
        exponent: f64,
    },
    /// `h = c0 n^{-1/(2s+1)}` for smoothness `s`.
    Theorem {
        s: f64,
        c0: f64,
    },
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::Power { exponent: -1.0 / 3.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `1 / ln n`.
    #[default]
    InvLog,
    /// `n^{-1/2}`.
    InvSqrt,
    /// `1 / n`.
    InvN,
    Fixed {
        value: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn need_two(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("sample-size rules need n >= 2, got {n}")));
    }
    Ok(n as f64)
}

pub fn bandwidth(rule: BandwidthRule, n: usize) -> Result<f64> {
    let h = match rule {
        BandwidthRule::Fixed { h } => h,
        BandwidthRule::Power { exponent } => need_two(n)?.powf(exponent),
        BandwidthRule::Theorem { s, c0 } => {
            positive("smoothness s", s)?;
            c0 * need_two(n)?.powf(-1.0 / (2.0 * s + 1.0))
        }
    };
    positive("bandwidth", h)
}

pub fn threshold(rule: ThresholdRule, n: usize) -> Result<f64> {
    let w = match rule {
        ThresholdRule::InvLog => 1.0 / need_two(n)?.ln(),
        ThresholdRule::InvSqrt => need_two(n)?.powf(-0.5),
        ThresholdRule::InvN => 1.0 / need_two(n)?,
        ThresholdRule::Fixed { value } => value,
    };
    positive("threshold", w)
}

/// Evaluation grid `x_i = i Δx`, `i = 1..=m`, with `m Δx ≈ x_max`.
/// `dx = None` selects `Δx = n^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dx: Option<f64>,
    pub x_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { dx: None, x_max: 5.0 }
    }
}

impl GridSpec {
    pub fn step(&self, n: usize) -> Result<f64> {
        let dx = match self.dx {
            Some(dx) => dx,
            None => (n.max(1) as f64).powf(-0.5),
        };
        positive("grid step", dx)
    }

    pub fn points(&self, n: usize) -> Result<(f64, usize)> {
        let dx = self.step(n)?;
        positive("x_max", self.x_max)?;
        if self.x_max <= dx {
            return Err(Error::invalid(format!(
                "x_max {} must exceed the grid step {dx}",
                self.x_max
            )));
        }
        // Tolerate rounding when x_max is a multiple of the step.
        let m = (self.x_max / dx * (1.0 + 1e-12)).floor() as usize;
        Ok((dx, m))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub bandwidth: BandwidthRule,
    #[serde(default)]
    pub threshold: ThresholdRule,
    #[serde(default)]
    pub grid: GridSpec,
}

/// Rule values for a sample of a given size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub n: usize,
    pub h: f64,
    pub varpi: f64,
    pub dx: f64,
    pub m: usize,
}

impl EstimatorConfig {
    pub fn resolve(&self, n: usize) -> Result<ResolvedConfig> {
        self.kernel.validate()?;
        let (dx, m) = self.grid.points(n)?;
        Ok(ResolvedConfig {
            n,
            h: bandwidth(self.bandwidth, n)?,
            varpi: threshold(self.threshold, n)?,
            dx,
            m,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_examples() {
        assert!((bandwidth(BandwidthRule::Power { exponent: -1.0 / 3.0 }, 1000).unwrap() - 0.1).abs() < 1e-12);
        assert!((bandwidth(BandwidthRule::Theorem { s: 1.0, c0: 1.0 }, 1000).unwrap() - 0.1).abs() < 1e-12);
        // n = e² is not an integer; evaluate the rule formula directly.
        let n = std::f64::consts::E.powi(2);
        assert!((1.0 / n.ln() - 0.5).abs() < 1e-15);
        assert!((threshold(ThresholdRule::InvLog, 8).unwrap() - 1.0 / 8f64.ln()).abs() < 1e-15);
        assert_eq!(threshold(ThresholdRule::InvN, 4).unwrap(), 0.25);
        assert_eq!(threshold(ThresholdRule::InvSqrt, 4).unwrap(), 0.5);
    }

    #[test]
    fn default_grid() {
        let (dx, m) = GridSpec::default().points(1024).unwrap();
        assert_eq!(dx, 0.03125);
        assert_eq!(m, 160);
        let (_, m) = GridSpec::default().points(1 << 17).unwrap();
        assert_eq!(m, 1810);
    }

    #[test]
    fn invalid_rules() {
        assert!(threshold(ThresholdRule::InvLog, 1).is_err());
        assert!(bandwidth(BandwidthRule::Fixed { h: 0.0 }, 10).is_err());
        assert!(GridSpec {
            dx: Some(1.0),
            x_max: 0.5
        }
        .points(10)
        .is_err());
    }

    #[test]
    fn json_defaults() {
        let c: EstimatorConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, EstimatorConfig::default());
        let c: EstimatorConfig = serde_json::from_str(
            r#"{"kernel":{"form":"compact_order","order":3},"threshold":{"rule":"fixed","value":0.2}}"#,
        )
        .unwrap();
        assert_eq!(c.kernel, KernelSpec::CompactOrder { order: 3 });
        assert_eq!(c.threshold, ThresholdRule::Fixed { value: 0.2 });
    }
}
