use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{fit_slope, quantile_sorted, relative_error, relative_error_where, ErrorSummary};
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_B, estimate_B_pooled_tau, threshold, EstimatorConfig, Observation, ObservationSet, ThresholdRule,
};
use crate::model::{ModelSpec, Scheme};
use crate::rng::derive_seed;
use crate::simulator::{simulate_full_tree, simulate_sparse_lineage, SimOptions};

/// Simulates `n` observed cells: the first `n` cells of a complete tree in
/// breadth-first order, or a lineage of `n` cells.
pub fn simulate_observations(
    spec: &ModelSpec,
    scheme: Scheme,
    n: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<ObservationSet> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let tree = match scheme {
        Scheme::Full => {
            let generations = usize::BITS - n.leading_zeros() - 1;
            simulate_full_tree(spec, generations, seed, opts)?
        }
        Scheme::Sparse => simulate_sparse_lineage(spec, n, seed, opts)?,
    };
    ObservationSet::new(
        tree.records()[..n]
            .iter()
            .map(|r| Observation {
                size_birth: r.size_birth,
                growth_rate: r.growth_rate,
                lifetime: r.lifetime,
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Sample sizes as powers of two.
    pub log2_sizes: Vec<u32>,
    pub replicates: usize,
    pub scheme: Scheme,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    /// Grid points enter the error when the raw denominator exceeds this.
    #[serde(default)]
    pub conditioning: ThresholdRule,
    #[serde(default)]
    pub pooled_tau: bool,
    pub seed: u64,
}

impl StudyConfig {
    /// Default ladder: sizes `2⁵ … 2¹⁰`, 100 replicates, defaults elsewhere.
    pub fn standard(scheme: Scheme, seed: u64) -> Self {
        StudyConfig {
            log2_sizes: (5..=10).collect(),
            replicates: 100,
            scheme,
            estimator: EstimatorConfig::default(),
            conditioning: ThresholdRule::InvLog,
            pooled_tau: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.log2_sizes.is_empty() {
            return Err(Error::invalid("a study needs at least one size"));
        }
        if self.log2_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("study sizes must be strictly increasing"));
        }
        if let Some(k) = self.log2_sizes.iter().find(|k| **k < 1 || **k > 30) {
            return Err(Error::invalid(format!("log2 size {k} outside 1..=30")));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("a study needs at least one replicate"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub log2_n: u32,
    pub summary: ErrorSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub config: StudyConfig,
    pub rows: Vec<StudyRow>,
    /// Least-squares slope of `ln ē` against `ln n`; needs two sizes.
    pub slope: Option<f64>,
    /// Needs three sizes.
    pub slope_se: Option<f64>,
}

impl ConvergenceStudy {
    pub fn means(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.summary.mean_error).collect()
    }
}

/// Relative error of one replicate of size `n`.
pub fn replicate_error(spec: &ModelSpec, config: &StudyConfig, n: usize, index: usize) -> Result<f64> {
    let seed = derive_seed(config.seed, &[n as u64, index as u64]);
    let obs = simulate_observations(spec, config.scheme, n, seed, &SimOptions::default())?;
    let est = if config.pooled_tau {
        estimate_B_pooled_tau(&obs, &config.estimator)?
    } else {
        estimate_B(&obs, &config.estimator)?
    };
    relative_error(
        &est.b_hat,
        &spec.division_rate,
        &est.raw_denominator,
        threshold(config.conditioning, n)?,
    )
}

pub fn run_convergence_study(spec: &ModelSpec, config: &StudyConfig) -> Result<ConvergenceStudy> {
    spec.validate()?;
    config.validate()?;
    let mut rows = Vec::with_capacity(config.log2_sizes.len());
    for &k in &config.log2_sizes {
        let n = 1usize << k;
        let outcomes = (0..config.replicates)
            .into_par_iter()
            .map(|i| match replicate_error(spec, config, n, i) {
                Ok(e) => Ok(Some(e)),
                Err(Error::EmptyConditioningSet { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        let errors: Vec<f64> = outcomes.iter().flatten().copied().collect();
        let skipped = outcomes.len() - errors.len();
        if errors.is_empty() {
            return Err(Error::EmptyConditioningSet {
                threshold: threshold(config.conditioning, n)?,
            });
        }
        if skipped > 0 {
            log::warn!(
                "n = 2^{k}: {skipped} of {} replicates had an empty conditioning set",
                config.replicates
            );
        }
        log::info!("n = 2^{k}: {} replicates done", config.replicates);
        let mut summary = ErrorSummary::from_errors(n, errors)?;
        summary.skipped = skipped;
        rows.push(StudyRow { log2_n: k, summary });
    }
    let ln_n: Vec<f64> = rows.iter().map(|r| (r.summary.n as f64).ln()).collect();
    let ln_e: Vec<f64> = rows.iter().map(|r| r.summary.mean_error.ln()).collect();
    let (slope, slope_se) = if rows.len() >= 2 {
        let (s, se) = fit_slope(&ln_n, &ln_e);
        (Some(s), se.is_finite().then_some(se))
    } else {
        (None, None)
    };
    Ok(ConvergenceStudy {
        config: config.clone(),
        rows,
        slope,
        slope_se,
    })
}

/// Pointwise empirical quantiles of `B̂` across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub n: usize,
    pub replicates: usize,
    pub level: f64,
    pub x0: f64,
    pub dx: f64,
    pub lower: Vec<f64>,
    pub median: Vec<f64>,
    pub upper: Vec<f64>,
    pub truth: Vec<f64>,
}

impl ConfidenceBand {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn width(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }
}

pub fn confidence_band(
    spec: &ModelSpec,
    scheme: Scheme,
    n: usize,
    replicates: usize,
    config: &EstimatorConfig,
    level: f64,
    seed: u64,
) -> Result<ConfidenceBand> {
    if replicates < 20 {
        return Err(Error::invalid(format!(
            "a band needs at least 20 replicates, got {replicates}"
        )));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::invalid(format!("band level must lie in (0, 1], got {level}")));
    }
    let curves = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let obs = simulate_observations(
                spec,
                scheme,
                n,
                derive_seed(seed, &[n as u64, i as u64]),
                &SimOptions::default(),
            )?;
            Ok(estimate_B(&obs, config)?.b_hat)
        })
        .collect::<Result<Vec<_>>>()?;
    let first = &curves[0];
    let tail = 0.5 * (1.0 - level);
    let (mut lower, mut median, mut upper) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..first.len() {
        let mut column: Vec<f64> = curves.iter().map(|c| c.values[i]).collect();
        column.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&column, tail));
        median.push(quantile_sorted(&column, 0.5));
        upper.push(quantile_sorted(&column, 1.0 - tail));
    }
    Ok(ConfidenceBand {
        n,
        replicates,
        level,
        x0: first.x0,
        dx: first.dx,
        truth: first.xs().map(|x| spec.division_rate.eval(x)).collect(),
        lower,
        median,
        upper,
    })
}

/// Per-replicate errors of the two estimators on the upper part of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub n: usize,
    /// Fraction of `x_max` above which errors are measured.
    pub region_start: f64,
    pub aware: Vec<f64>,
    pub pooled: Vec<f64>,
}

impl AblationReport {
    /// Fraction of replicates where ignoring variability did worse.
    pub fn pooled_worse_fraction(&self) -> f64 {
        let worse = self.aware.iter().zip(&self.pooled).filter(|(a, p)| p > a).count();
        worse as f64 / self.aware.len() as f64
    }
}

/// Compares the variability-aware estimator with the pooled-growth one on
/// grid points `x ≥ region_start · x_max` where the raw denominator of the
/// aware estimator exceeds the threshold `ϖ`.
pub fn variability_ablation(
    spec: &ModelSpec,
    n: usize,
    replicates: usize,
    config: &EstimatorConfig,
    region_start: f64,
    seed: u64,
) -> Result<AblationReport> {
    let pairs = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let obs = simulate_observations(
                spec,
                Scheme::Full,
                n,
                derive_seed(seed, &[n as u64, i as u64]),
                &SimOptions::default(),
            )?;
            let aware = estimate_B(&obs, config)?;
            let pooled = estimate_B_pooled_tau(&obs, config)?;
            let cut = region_start * config.grid.x_max;
            let varpi = aware.resolved.varpi;
            let keep = |i: usize| aware.b_hat.x(i) >= cut && aware.raw_denominator[i] > varpi;
            let empty = || Error::EmptyConditioningSet { threshold: varpi };
            let a = relative_error_where(&aware.b_hat, &spec.division_rate, keep).ok_or_else(empty)?;
            let p = relative_error_where(&pooled.b_hat, &spec.division_rate, keep).ok_or_else(empty)?;
            Ok((a, p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationReport {
        n,
        region_start,
        aware: pairs.iter().map(|p| p.0).collect(),
        pooled: pairs.iter().map(|p| p.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_sizes() {
        let spec = ModelSpec::reference();
        for n in [1, 2, 3, 7, 8, 100] {
            for scheme in [Scheme::Full, Scheme::Sparse] {
                assert_eq!(
                    simulate_observations(&spec, scheme, n, 1, &SimOptions::default())
                        .unwrap()
                        .len(),
                    n
                );
            }
        }
    }

    #[test]
    fn small_study_is_deterministic() {
        let spec = ModelSpec::reference();
        let config = StudyConfig {
            log2_sizes: vec![5, 6],
            replicates: 8,
            ..StudyConfig::standard(Scheme::Full, 9)
        };
        let a = run_convergence_study(&spec, &config).unwrap();
        let b = run_convergence_study(&spec, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2);
        assert!(a
            .rows
            .iter()
            .all(|r| r.summary.per_replicate.len() + r.summary.skipped == 8));
    }

    #[test]
    fn rejects_unsorted_sizes() {
        let config = StudyConfig {
            log2_sizes: vec![6, 5],
            ..StudyConfig::standard(Scheme::Full, 0)
        };
        assert!(run_convergence_study(&ModelSpec::reference(), &config).is_err());
    }

    #[test]
    fn full_level_band_is_envelope() {
        let spec = ModelSpec::reference();
        let config = EstimatorConfig::default();
        let band = confidence_band(&spec, Scheme::Full, 64, 20, &config, 1.0, 3).unwrap();
        let curves: Vec<_> = (0..20)
            .map(|i| {
                let obs = simulate_observations(
                    &spec,
                    Scheme::Full,
                    64,
                    derive_seed(3, &[64, i]),
                    &SimOptions::default(),
                )
                .unwrap();
                estimate_B(&obs, &config).unwrap().b_hat
            })
            .collect();
        for i in 0..band.lower.len() {
            let lo = curves.iter().map(|c| c.values[i]).fold(f64::INFINITY, f64::min);
            let hi = curves.iter().map(|c| c.values[i]).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(band.lower[i], lo);
            assert_eq!(band.upper[i], hi);
            assert!(band.lower[i] <= band.median[i] && band.median[i] <= band.upper[i]);
        }
    }
}
