use serde::Serialize;

use super::ess::{ess, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Mean and variance of the density `∝ exp(−a·y)` on `[lo, hi]`.
pub fn truncated_exponential_moments(a: f64, lo: f64, hi: f64) -> (f64, f64) {
    let len = hi - lo;
    let al = a * len;
    let (mean0, var) = if al.abs() < 1e-3 {
        // series in aL; the next terms are O((aL)⁴) relative
        let mean0 = len / 2.0 - a * len * len / 12.0 + a.powi(3) * len.powi(4) / 720.0;
        let var = len * len / 12.0 - a * a * len.powi(4) / 240.0;
        (mean0, var)
    } else {
        let em1 = al.exp_m1();
        let mean0 = 1.0 / a - len / em1;
        let second = 2.0 / (a * a) - (len * len + 2.0 * len / a) / em1;
        (mean0, second - mean0 * mean0)
    };
    (lo + mean0, var)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoordinateMoments {
    pub mean: f64,
    pub expected_mean: f64,
    /// ESS-adjusted standard error of the mean.
    pub std_error: f64,
    pub z_mean: f64,
    pub variance: f64,
    pub expected_variance: f64,
    /// `(variance − expected) / expected`
    pub variance_rel_error: f64,
    pub ess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub coordinates: Vec<CoordinateMoments>,
}

impl MomentReport {
    pub fn max_abs_z(&self) -> f64 {
        self.coordinates.iter().fold(0.0, |a, c| a.max(c.z_mean.abs()))
    }

    pub fn max_variance_rel_error(&self) -> f64 {
        self.coordinates
            .iter()
            .fold(0.0, |a, c| a.max(c.variance_rel_error.abs()))
    }
}

/// Compares per-coordinate sample moments with the product-form target on the
/// box `[lo, hi]ⁿ`, whose coordinates are independent truncated exponentials.
pub fn moment_test_box<T: Real>(
    samples: &Matrix<T>,
    alpha: &[T],
    lo: f64,
    hi: f64,
) -> Result<MomentReport> {
    let k = samples.nrows();
    if k < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            have: k,
            need: MIN_SAMPLES,
        });
    }
    if alpha.len() != samples.ncols() {
        return Err(Error::InvalidDimension(format!(
            "alpha has length {}, samples have {} columns",
            alpha.len(),
            samples.ncols()
        )));
    }
    if !(lo < hi) {
        return Err(Error::DomainError("need lo < hi".into()));
    }
    let ess = ess(samples)?;
    let coordinates = (0..samples.ncols())
        .map(|j| {
            let col: Vec<f64> = samples.column(j).into_iter().map(Real::as_f64).collect();
            let mean = col.iter().sum::<f64>() / k as f64;
            let variance = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            let (expected_mean, expected_variance) =
                truncated_exponential_moments(alpha[j].as_f64(), lo, hi);
            let std_error = (variance / ess[j].ess).sqrt();
            CoordinateMoments {
                mean,
                expected_mean,
                std_error,
                z_mean: (mean - expected_mean) / std_error,
                variance,
                expected_variance,
                variance_rel_error: (variance - expected_variance) / expected_variance,
                ess: ess[j].ess,
            }
        })
        .collect();
    Ok(MomentReport { coordinates })
}
