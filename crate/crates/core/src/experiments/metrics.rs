use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::CurveOnGrid;
use crate::model::DivisionRate;

/// Mean and spread of per-replicate relative errors at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub n: usize,
    pub mean_error: f64,
    /// `(M⁻¹ Σ (e_i − ē)²)^{1/2}`.
    pub std_dev: f64,
    pub replicates: usize,
    pub per_replicate: Vec<f64>,
    /// Replicates left out because no grid point passed the conditioning.
    #[serde(default)]
    pub skipped: usize,
}

impl ErrorSummary {
    pub fn from_errors(n: usize, errors: Vec<f64>) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::invalid("an error summary needs at least one replicate"));
        }
        let m = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / m;
        let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / m;
        Ok(ErrorSummary {
            n,
            mean_error: mean,
            std_dev: var.sqrt(),
            replicates: errors.len(),
            per_replicate: errors,
            skipped: 0,
        })
    }

    pub fn median(&self) -> f64 {
        let mut e = self.per_replicate.clone();
        e.sort_by(f64::total_cmp);
        quantile_sorted(&e, 0.5)
    }
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Discrete L2 norm of `B̂ − B` relative to that of `B`, over the grid
/// points where the raw denominator exceeds `threshold`.
pub fn relative_error(est: &CurveOnGrid, truth: &DivisionRate, raw_denominator: &[f64], threshold: f64) -> Result<f64> {
    if raw_denominator.len() != est.len() {
        return Err(Error::invalid(format!(
            "{} denominator values for a curve of {} points",
            raw_denominator.len(),
            est.len()
        )));
    }
    relative_error_where(est, truth, |i| raw_denominator[i] > threshold)
        .ok_or(Error::EmptyConditioningSet { threshold })
}

pub(crate) fn relative_error_where(
    est: &CurveOnGrid,
    truth: &DivisionRate,
    keep: impl Fn(usize) -> bool,
) -> Option<f64> {
    let (mut num, mut den, mut count) = (0.0, 0.0, 0usize);
    for (i, (x, b)) in est.xs().zip(&est.values).enumerate() {
        if !keep(i) {
            continue;
        }
        let t = truth.eval(x);
        num += (b - t).powi(2);
        den += t * t;
        count += 1;
    }
    (count > 0 && den > 0.0).then(|| (num / den).sqrt())
}

/// Least-squares slope of `y` on `x` and its standard error.
pub fn fit_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    if x.len() < 3 {
        return (slope, f64::NAN);
    }
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, (rss / (n - 2.0) / sxx).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x2() -> DivisionRate {
        DivisionRate::power_law(1.0, 2.0).unwrap()
    }

    fn curve(f: impl Fn(f64) -> f64) -> CurveOnGrid {
        let values = (1..=50).map(|i| f(0.1 * i as f64)).collect();
        CurveOnGrid::new(0.1, 0.1, values).unwrap()
    }

    #[test]
    fn identity_and_doubling() {
        let raw = vec![1.0; 50];
        assert!(relative_error(&curve(|x| x * x), &x2(), &raw, 0.5).unwrap() < 1e-14);
        let e = relative_error(&curve(|x| 2.0 * x * x), &x2(), &raw, 0.5).unwrap();
        assert!((e - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_conditioning() {
        let raw = vec![0.1; 50];
        assert!(matches!(
            relative_error(&curve(|x| x), &x2(), &raw, 0.5),
            Err(Error::EmptyConditioningSet { .. })
        ));
    }

    #[test]
    fn only_conditioned_points_count() {
        let mut raw = vec![0.0; 50];
        raw[..10].iter_mut().for_each(|r| *r = 1.0);
        // Wrong only where the denominator is small.
        let est = curve(|x| if x <= 1.0 + 1e-9 { x * x } else { 0.0 });
        assert!(relative_error(&est, &x2(), &raw, 0.5).unwrap() < 1e-14);
    }

    #[test]
    fn std_dev_two_pass() {
        let errors: Vec<f64> = (0..100).map(|i| ((i * 37) % 101) as f64 / 101.0 + 1e3).collect();
        let s = ErrorSummary::from_errors(10, errors.clone()).unwrap();
        let mean = errors.iter().sum::<f64>() / 100.0;
        let direct = (errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / 100.0).sqrt();
        assert!((s.std_dev - direct).abs() < 1e-12);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert!((quantile_sorted(&v, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn slope_of_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let (s, se) = fit_slope(&x, &y);
        assert!((s - 2.0).abs() < 1e-14);
        assert!(se < 1e-7);
    }
}
