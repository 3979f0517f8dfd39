use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Fewest rows accepted by the sample-based diagnostics.
pub const MIN_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EssEstimate {
    pub ess: f64,
    /// Integrated autocorrelation time `k / ess`.
    pub tau: f64,
    /// The column had zero variance; `ess` is reported as 1.
    pub degenerate: bool,
}

/// Effective sample size of each column, using Geyer's initial monotone
/// positive sequence to truncate the autocorrelation sum.
pub fn ess<T: Real>(samples: &Matrix<T>) -> Result<Vec<EssEstimate>> {
    let k = samples.nrows();
    if k < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            have: k,
            need: MIN_SAMPLES,
        });
    }
    Ok((0..samples.ncols())
        .map(|j| {
            let col: Vec<f64> = samples.column(j).into_iter().map(Real::as_f64).collect();
            ess_series(&col)
        })
        .collect())
}

/// ESS of a single series (any length ≥ 2).
pub fn ess_series(x: &[f64]) -> EssEstimate {
    let k = x.len();
    let mean = x.iter().sum::<f64>() / k as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let var0 = centered.iter().map(|c| c * c).sum::<f64>() / k as f64;
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    if !(var0 > (1e-14 * scale).powi(2)) {
        return EssEstimate {
            ess: 1.0,
            tau: k as f64,
            degenerate: true,
        };
    }
    let autocorr = |lag: usize| -> f64 {
        centered[..k - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / (k as f64 * var0)
    };

    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < k {
        let pair = autocorr(lag) + autocorr(lag + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        lag += 2;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / k as f64);
    EssEstimate {
        ess: k as f64 / tau,
        tau,
        degenerate: false,
    }
}
