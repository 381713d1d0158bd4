//! Small textual formats accepted on the command line.

use gftree_core::estimator::{BandwidthRule, KernelSpec, ThresholdRule};
use gftree_core::invariant::PdeScheme;
use gftree_core::model::{DivisionRate, GrowthBounds, GrowthKernel, GrowthLaw};

fn number(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("{s:?} is not a number"))
}

fn numbers(s: &str, count: usize) -> Result<Vec<f64>, String> {
    let v = s.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
    if v.len() != count {
        return Err(format!("expected {count} comma-separated numbers, got {s:?}"));
    }
    Ok(v)
}

/// `c*x^l`, `c x^l`, `x^l`, `c*x` or `x`, with `l > 0`.
pub fn division_rate(s: &str) -> Result<DivisionRate, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let (coef, rest) = match t.find('x') {
        None => return Err(format!("cannot read {s:?} as c*x^l")),
        Some(i) => (&t[..i], &t[i + 1..]),
    };
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let c = if coef.is_empty() { 1.0 } else { number(coef)? };
    let l = match rest {
        "" => 1.0,
        r => number(
            r.strip_prefix('^')
                .ok_or_else(|| format!("cannot read {s:?} as c*x^l"))?,
        )?,
    };
    DivisionRate::power_law(c, l).map_err(|e| e.to_string())
}

/// `dirac:RATE`, `uniform-increment:ALPHA,SCALE`, `gaussian-increment:STD`,
/// `resample-uniform:LO,HI` or `resample-gaussian:MEAN,STD`.
pub fn growth_kernel(s: &str) -> Result<GrowthKernel, String> {
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    Ok(match name.trim() {
        "dirac" => GrowthKernel::Dirac { rate: number(args)? },
        "uniform-increment" => {
            let v = numbers(args, 2)?;
            GrowthKernel::UniformIncrement {
                alpha: v[0],
                scale: v[1],
            }
        }
        "gaussian-increment" => GrowthKernel::GaussianIncrement { std: number(args)? },
        "resample-uniform" => {
            let v = numbers(args, 2)?;
            GrowthKernel::IndependentResample {
                law: GrowthLaw::Uniform { lo: v[0], hi: v[1] },
            }
        }
        "resample-gaussian" => {
            let v = numbers(args, 2)?;
            GrowthKernel::IndependentResample {
                law: GrowthLaw::Gaussian { mean: v[0], std: v[1] },
            }
        }
        other => return Err(format!("unknown growth kernel {other:?}")),
    })
}

/// `EMIN,EMAX`.
pub fn bounds(s: &str) -> Result<GrowthBounds, String> {
    let v = numbers(s, 2)?;
    GrowthBounds::new(v[0], v[1]).map_err(|e| e.to_string())
}

/// `A..B` (inclusive) or a comma-separated list.
pub fn sizes(s: &str) -> Result<Vec<u32>, String> {
    let int = |t: &str| {
        t.trim()
            .parse::<u32>()
            .map_err(|_| format!("{t:?} is not a size exponent"))
    };
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (int(a)?, int(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty range {s:?}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(int).collect()
}

/// `power:EXP`, `fixed:H`, `theorem:S,C0` or a bare bandwidth.
pub fn bandwidth(s: &str) -> Result<BandwidthRule, String> {
    let (name, args) = s.split_once(':').unwrap_or(("fixed", s));
    Ok(match name {
        "power" => BandwidthRule::Power {
            exponent: number(args)?,
        },
        "fixed" => BandwidthRule::Fixed { h: number(args)? },
        "theorem" => {
            let v = numbers(args, 2)?;
            BandwidthRule::Theorem { s: v[0], c0: v[1] }
        }
        other => return Err(format!("unknown bandwidth rule {other:?}")),
    })
}

/// `inv_log`, `inv_sqrt`, `inv_n` or a fixed value.
pub fn threshold(s: &str) -> Result<ThresholdRule, String> {
    Ok(match s {
        "inv_log" => ThresholdRule::InvLog,
        "inv_sqrt" => ThresholdRule::InvSqrt,
        "inv_n" => ThresholdRule::InvN,
        v => ThresholdRule::Fixed { value: number(v)? },
    })
}

/// `gaussian` or `order:N`.
pub fn kernel(s: &str) -> Result<KernelSpec, String> {
    match s.split_once(':') {
        None if s == "gaussian" => Ok(KernelSpec::Gaussian),
        Some(("order", n)) => {
            let order = n.trim().parse().map_err(|_| format!("{n:?} is not an order"))?;
            let k = KernelSpec::CompactOrder { order };
            k.validate().map_err(|e| e.to_string())?;
            Ok(k)
        }
        _ => Err(format!("unknown kernel {s:?} (gaussian or order:N)")),
    }
}

pub fn pde_scheme(s: &str) -> Result<PdeScheme, String> {
    match s {
        "linear" => Ok(PdeScheme::Linear),
        "upwind" => Ok(PdeScheme::Upwind),
        other => Err(format!("unknown PDE scheme {other:?} (linear or upwind)")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_rates() {
        for (text, c, l) in [
            ("x^2", 1.0, 2.0),
            ("2*x^1.5", 2.0, 1.5),
            ("0.5 x", 0.5, 1.0),
            ("x", 1.0, 1.0),
        ] {
            assert_eq!(
                division_rate(text).unwrap(),
                DivisionRate::power_law(c, l).unwrap(),
                "{text}"
            );
        }
        assert!(division_rate("x**2").is_err());
        assert!(division_rate("y^2").is_err());
        assert!(division_rate("3").is_err());
        assert!(division_rate("x^0").is_err());
    }

    #[test]
    fn kernels() {
        assert_eq!(growth_kernel("dirac:1").unwrap(), GrowthKernel::Dirac { rate: 1.0 });
        assert_eq!(
            growth_kernel("uniform-increment:0.5,0.5").unwrap(),
            GrowthKernel::UniformIncrement { alpha: 0.5, scale: 0.5 }
        );
        assert!(growth_kernel("uniform-increment:0.5").is_err());
        assert!(growth_kernel("brownian:1").is_err());
    }

    #[test]
    fn size_lists() {
        assert_eq!(sizes("5..10").unwrap(), vec![5, 6, 7, 8, 9, 10]);
        assert_eq!(sizes("5..=6").unwrap(), vec![5, 6]);
        assert_eq!(sizes("3,7").unwrap(), vec![3, 7]);
        assert!(sizes("7..3").is_err());
    }

    #[test]
    fn estimator_rules() {
        assert_eq!(bandwidth("0.1").unwrap(), BandwidthRule::Fixed { h: 0.1 });
        assert_eq!(
            bandwidth("power:-0.2").unwrap(),
            BandwidthRule::Power { exponent: -0.2 }
        );
        assert_eq!(threshold("inv_sqrt").unwrap(), ThresholdRule::InvSqrt);
        assert_eq!(threshold("0.05").unwrap(), ThresholdRule::Fixed { value: 0.05 });
        assert_eq!(kernel("order:3").unwrap(), KernelSpec::CompactOrder { order: 3 });
        assert!(kernel("order:0").is_err());
    }
}
