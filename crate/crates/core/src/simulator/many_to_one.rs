//! Monte Carlo check of the many-to-one identity
//! `E_x[φ(χ(t), 𝒱(t), 𝒱̄(t))] = E_x[Σ_u ξ_t^u e^{-τ̄_t^u} / x · φ(ξ_t^u, τ_t^u, τ̄_t^u)]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::population::simulate_population;
use super::tagged::simulate_tagged_cell;
use super::SimOptions;
use crate::error::{Error, Result};
use crate::model::{ModelSpec, SizeLaw};
use crate::rng::derive_seed;

/// Test function `φ(size, growth, cumulative growth)`.
#[derive(Clone, Copy)]
pub struct TestFunction {
    pub name: &'static str,
    pub eval: fn(f64, f64, f64) -> f64,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name)
    }
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Indicators and polynomials, all compactly supported in the size variable.
pub fn default_battery() -> Vec<TestFunction> {
    vec![
        TestFunction {
            name: "1{0.5<=x<=1.5}",
            eval: |x, _, _| ind((0.5..=1.5).contains(&x)),
        },
        TestFunction {
            name: "x 1{x<=3}",
            eval: |x, _, _| x * ind(x <= 3.0),
        },
        TestFunction {
            name: "(x(3-x))_+",
            eval: |x, _, _| (x * (3.0 - x)).max(0.0),
        },
        TestFunction {
            name: "v 1{x<=3}",
            eval: |x, v, _| v * ind(x <= 3.0),
        },
        TestFunction {
            name: "w 1{x<=2.5}",
            eval: |x, _, w| w * ind(x <= 2.5),
        },
        TestFunction {
            name: "1{v>1.5} 1{x<=2}",
            eval: |x, v, _| ind(v > 1.5) * ind(x <= 2.0),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManyToOneRow {
    pub function: String,
    pub tagged_mean: f64,
    pub tagged_se: f64,
    pub population_mean: f64,
    pub population_se: f64,
    /// `|difference| / combined standard error`.
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManyToOneReport {
    pub root_size: f64,
    pub t: f64,
    pub replicates: usize,
    pub tolerance_se: f64,
    pub rows: Vec<ManyToOneRow>,
}

impl ManyToOneReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Compares both sides of the identity on independent samples, starting
/// from a root of size `root_size` whose growth rate follows the model's
/// initial law. Each side uses `replicates` independent runs.
pub fn many_to_one_check(
    spec: &ModelSpec,
    root_size: f64,
    t: f64,
    replicates: usize,
    battery: &[TestFunction],
    seed: u64,
    tolerance_se: f64,
) -> Result<ManyToOneReport> {
    if replicates < 2 {
        return Err(Error::invalid("many-to-one check needs at least two replicates"));
    }
    let mut spec = spec.clone();
    spec.initial.size = SizeLaw::point(root_size);
    spec.validate()?;
    let opts = SimOptions::default();
    let k = battery.len();

    let tagged: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let path = simulate_tagged_cell(&spec, t, derive_seed(seed, &[0, i as u64]), &opts)?;
            let (x, v, w) = (path.size(t), path.growth(t), path.cumulative_growth(t));
            Ok(battery.iter().map(|f| (f.eval)(x, v, w)).collect())
        })
        .collect::<Result<_>>()?;
    let population: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let cells = simulate_population(&spec, t, derive_seed(seed, &[1, i as u64]), &opts, 1 << 24)?;
            Ok(battery
                .iter()
                .map(|f| {
                    cells
                        .iter()
                        .map(|c| {
                            let weight = c.size * (-c.cumulative_growth).exp() / root_size;
                            weight * (f.eval)(c.size, c.growth_rate, c.cumulative_growth)
                        })
                        .sum()
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let rows = (0..k)
        .map(|j| {
            let a: Vec<f64> = tagged.iter().map(|row| row[j]).collect();
            let b: Vec<f64> = population.iter().map(|row| row[j]).collect();
            let (ma, sa) = mean_se(&a);
            let (mb, sb) = mean_se(&b);
            let combined = (sa * sa + sb * sb).sqrt();
            let diff = (ma - mb).abs();
            let z = if combined > 0.0 {
                diff / combined
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            ManyToOneRow {
                function: battery[j].name.to_string(),
                tagged_mean: ma,
                tagged_se: sa,
                population_mean: mb,
                population_se: sb,
                z,
                pass: z <= tolerance_se,
            }
        })
        .collect();
    Ok(ManyToOneReport {
        root_size,
        t,
        replicates,
        tolerance_se,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_agrees() {
        let report = many_to_one_check(&ModelSpec::reference(), 1.0, 0.5, 2000, &default_battery(), 3, 3.0).unwrap();
        assert_eq!(report.rows.len(), 6);
        for row in &report.rows {
            assert!(row.pass, "{row:?}");
        }
    }
}
