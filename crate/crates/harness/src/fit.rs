//! Least-squares power-law fits on log-log data.

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    /// p in value ≈ C·t^{-p}.
    pub exponent: f64,
    /// ln C.
    pub intercept: f64,
    /// ln value − fitted line, one per sample in the window.
    pub residuals: Vec<f64>,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFitResult {
    pub exponent: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    /// (t_min, t_max) of the samples used.
    pub window: (f64, f64),
    pub r_squared: f64,
    /// Same fit over every sample.
    pub full: LineFit,
}

fn line_fit(pts: &[(f64, f64)]) -> LineFit {
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = pts.iter().map(|&(x, y)| y - (intercept + slope * x)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LineFit {
        exponent: -slope,
        intercept,
        residuals,
        r_squared,
    }
}

/// Fit value ~ C·t^{-p} over the largest-t half of the samples.
pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<DecayFitResult> {
    if samples.len() < 4 {
        return Err(HarnessError::Config(format!(
            "power-law fit needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    for (i, &(t, v)) in samples.iter().enumerate() {
        if !(t > 0.0) || !(v > 0.0) || !t.is_finite() || !v.is_finite() {
            return Err(HarnessError::Config(format!(
                "sample {i} (t={t}, value={v}) is not positive"
            )));
        }
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let logs: Vec<(f64, f64)> = sorted.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let start = logs.len() / 2;
    let half = line_fit(&logs[start..]);
    Ok(DecayFitResult {
        exponent: half.exponent,
        intercept: half.intercept,
        residuals: half.residuals,
        window: (sorted[start].0, sorted[sorted.len() - 1].0),
        r_squared: half.r_squared,
        full: line_fit(&logs),
    })
}

/// Decay exponent implied by two samples.
pub fn two_point_exponent(a: (f64, f64), b: (f64, f64)) -> f64 {
    -(b.1 / a.1).ln() / (b.0 / a.0).ln()
}

/// Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(count: usize) -> Vec<f64> {
        (0..count)
            .map(|i| 10f64.powf(3.0 + 4.0 * i as f64 / (count - 1) as f64))
            .collect()
    }

    #[test]
    fn exact_power_law() {
        let s: Vec<_> = grid(13).into_iter().map(|t| (t, 3.0 * t.powf(-0.25))).collect();
        let f = fit_power_law(&s).unwrap();
        assert!((f.exponent - 0.25).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.residuals.len(), 7);
        assert!((f.window.1 - 1e7).abs() < 1e-3);
    }

    #[test]
    fn constant_samples() {
        let s: Vec<_> = grid(8).into_iter().map(|t| (t, 0.7)).collect();
        let f = fit_power_law(&s).unwrap();
        assert_eq!(f.exponent, 0.0);
        assert_eq!(f.full.exponent, 0.0);
    }

    #[test]
    fn log_perturbed_power_law() {
        let s: Vec<_> = grid(13)
            .into_iter()
            .map(|t| (t, 2.0 * t.powf(-1.0 / 3.0) * (1.0 + 0.1 / t.ln())))
            .collect();
        let f = fit_power_law(&s).unwrap();
        assert!((f.exponent - 1.0 / 3.0).abs() < 0.02, "{}", f.exponent);
    }

    #[test]
    fn rejects_bad_samples() {
        let s = vec![(1.0, 1.0), (2.0, 0.5), (3.0, -0.1), (4.0, 0.2)];
        let e = fit_power_law(&s).unwrap_err().to_string();
        assert!(e.contains("sample 2"), "{e}");
        assert!(fit_power_law(&s[..3]).is_err());
    }

    #[test]
    fn correlation_sign() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &[1.0, -1.0, -3.0, -5.0]) + 1.0).abs() < 1e-15);
        assert!((two_point_exponent((1.0, 1.0), (100.0, 0.1)) - 0.5).abs() < 1e-15);
    }
}
