//! Numerical integration: adaptive Gauss-Kronrod and uniform-grid trapezoid rules.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default relative tolerance for adaptive integration.
pub const REL_TOL: f64 = 1e-10;

const MAX_DEPTH: u32 = 48;
const MAX_INTERVALS: u32 = 100_000;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive 15-point Gauss-Kronrod integration of `f` over `[a, b]`. The
/// tolerance is relative to `∫|f|`, so integrals that cancel to zero still
/// terminate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -integrate(f, b, a, rel_tol);
    }
    let (scale, _) = gk15(&|x| f(x).abs(), a, b);
    let abs_tol = (rel_tol * scale).max(rel_tol * 1e-20);
    let mut budget = MAX_INTERVALS;
    recurse(&f, a, b, abs_tol, 0, &mut budget)
}

fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, depth: u32, budget: &mut u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= abs_tol || depth >= MAX_DEPTH || *budget == 0 || (b - a) <= f64::EPSILON * a.abs().max(b.abs()) {
        return value;
    }
    *budget -= 1;
    let mid = 0.5 * (a + b);
    recurse(f, a, mid, 0.5 * abs_tol, depth + 1, budget) + recurse(f, mid, b, 0.5 * abs_tol, depth + 1, budget)
}

/// Integrates over consecutive breakpoints, splitting at every discontinuity the caller knows of.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], rel_tol: f64) -> f64 {
    breaks.windows(2).map(|w| integrate(&f, w[0], w[1], rel_tol)).sum()
}

/// Trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, REL_TOL);
        assert!((v - 8.0).abs() < 1e-13);
    }

    #[test]
    fn exponential_tail() {
        let v = integrate(|x: f64| (-x).exp(), 0.0, 50.0, REL_TOL);
        assert!((v - (1.0 - (-50.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let v = integrate(|x: f64| x.sin(), std::f64::consts::PI, 0.0, REL_TOL);
        assert!((v + 2.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_linear_exact() {
        let xs: Vec<f64> = (0..11).map(|i| 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((trapezoid(&ys, 0.1) - 2.0).abs() < 1e-14);
    }
}
