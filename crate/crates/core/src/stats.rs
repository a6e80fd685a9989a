//! Log-log slope fits and Monte Carlo summaries.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Least-squares fit of `log y = intercept + slope log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (0 for two points).
    pub slope_se: f64,
    pub r_squared: f64,
    /// Number of points that entered the fit.
    pub points: usize,
}

impl SlopeFit {
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Fits a power law through the pairs with `x > 0`, `y > 0`, both finite.
/// Fewer than `min_points` usable pairs is a [`Error::DegenerateFit`].
pub fn fit_power_law(xs: &[f64], ys: &[f64], min_points: usize) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite() && **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < min_points.max(2) {
        return Err(Error::DegenerateFit(format!(
            "{n} usable points, need {}",
            min_points.max(2)
        )));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let slope_se = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(SlopeFit {
        slope,
        intercept,
        slope_se,
        r_squared,
        points: n,
    })
}

/// Power-law fit of at least three strictly positive, finite pairs.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(Error::DegenerateFit(format!(
            "{} abscissae but {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::DegenerateFit(format!("non-positive value {v}")));
    }
    fit_power_law(xs, ys, 3)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                samples: 0,
            };
        }
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / nf).sqrt(),
            samples: n,
        }
    }

    /// Normal-approximation confidence interval at `z` standard errors.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (
            self.mean - z * self.std_error,
            self.mean + z * self.std_error,
        )
    }
}

/// Root mean square.
pub fn rms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let xs = [0.1, 0.05, 0.025, 0.0125];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let f = fit_slope(&xs, &ys).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!((f.predict(0.2) - 3.0 * 0.2f64.powf(1.5)).abs() < 1e-12);
        assert!(f.slope_se < 1e-10);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_slope(&[1.0, 2.0, 3.0], &[1.0, 0.0, -1.0]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(fit_slope(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_slope(&[1.0, 2.0, 3.0], &[1.0, 2.0, 0.0]).is_err());
        assert!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, 2.0, 0.0], 2).is_ok());
        assert!(fit_power_law(&[1.0, 2.0], &[1.0, 2.0], 2).is_ok());
    }

    #[test]
    fn documented_examples() {
        let f = fit_slope(&[1.0, 2.0, 4.0], &[1.0, 4.0, 16.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        let c = fit_slope(&[1.0, 2.0, 4.0], &[3.0, 3.0, 3.0]).unwrap();
        assert!(c.slope.abs() < 1e-14);
        assert!((0.0..=1.0).contains(&c.r_squared));
    }

    #[test]
    fn mean_estimate() {
        let m = MeanEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(rms(&[3.0, 4.0]), (12.5f64).sqrt());
    }

    proptest! {
        #[test]
        fn slope_is_scale_invariant(p in -3.0f64..3.0, c in 0.01f64..100.0) {
            let xs = [1.0, 0.5, 0.25, 0.125, 0.0625];
            let ys: Vec<f64> = xs.iter().map(|x: &f64| c * x.powf(p)).collect();
            let f = fit_slope(&xs, &ys).unwrap();
            prop_assert!((f.slope - p).abs() < 1e-10);
        }
    }
}
