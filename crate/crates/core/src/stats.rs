//! Small numeric helpers shared by discovery, scoring and the simulator.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Logistic sigmoid, stable for large negative inputs.
pub fn sigmoid(x: f64) -> f64 {
    crate::mcg::cbs(x)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Pearson correlation of `x[t]` against `y[t + lag]`, using only positions
/// where both values are present. Returns the coefficient and the number of
/// pairs used; zero variance on either side yields `r = 0`.
pub fn lagged_pearson(x: &[Option<f64>], y: &[Option<f64>], lag: usize) -> (f64, usize) {
    let len = x.len().min(y.len());
    if lag >= len {
        return (0.0, 0);
    }
    let pairs = (0..len - lag).filter_map(|t| match (x[t], y[t + lag]) {
        (Some(a), Some(b)) => Some((a, b)),
        _ => None,
    });
    pearson_pairs(pairs)
}

pub fn pearson_pairs(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, usize) {
    let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
    for (a, b) in pairs.clone() {
        n += 1;
        sx += a;
        sy += b;
    }
    if n < 2 {
        return (0.0, n);
    }
    let (mx, my) = (sx / n as f64, sy / n as f64);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in pairs {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    // Sums of squares at rounding-noise level count as constant.
    let flat = |ss: f64, m: f64| ss <= 1e-24 * m * m * n as f64;
    if sxx == 0.0 || syy == 0.0 || flat(sxx, mx) || flat(syy, my) {
        return (0.0, n);
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    (r.clamp(-1.0, 1.0), n)
}

/// Two-sided p-value of the t-test for a Pearson coefficient `r` over `n` pairs.
pub fn pearson_p_value(r: f64, n: usize) -> f64 {
    if n < 3 {
        return 1.0;
    }
    let r = r.abs();
    if r >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * (1.0 - dist.cdf(t))).clamp(0.0, 1.0)
}
