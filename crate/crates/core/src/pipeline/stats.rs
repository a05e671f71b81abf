//! Descriptive statistics for a return series.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sample_stats;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n_obs: usize,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator).
    pub std_dev: f64,
    /// `None` for constant series or fewer than 3 observations.
    pub skewness: Option<f64>,
    /// Pearson kurtosis (Normal = 3). `None` for constant series or fewer
    /// than 4 observations.
    pub kurtosis: Option<f64>,
    pub min: f64,
    pub max: f64,
}

pub fn summary_stats(returns: &[f64]) -> Result<SummaryStats> {
    if returns.is_empty() {
        return Err(Error::domain("summary statistics of an empty series"));
    }
    if let Some(i) = returns.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("observation {i} is not finite")));
    }
    let n = returns.len();
    let mean = sample_stats::mean(returns);
    let (m2, m3, m4) = sample_stats::central_moments(returns);
    let constant = sample_stats::is_constant(returns) || m2 == 0.0;
    let skewness = (!constant && n >= 3).then(|| m3 / m2.powf(1.5));
    let kurtosis = (!constant && n >= 4).then(|| m4 / (m2 * m2));
    let min = returns.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = returns.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(SummaryStats {
        n_obs: n,
        // rounding can push the mean of a constant series off its value
        mean: mean.clamp(min, max),
        std_dev: if constant { 0.0 } else { sample_stats::std_dev(returns) },
        skewness,
        kurtosis,
        min,
        max,
    })
}
