//! Fixed-order reductions and small estimator helpers.
//!
//! Every reduction in the crate goes through [`pairwise_sum`] so that results
//! do not depend on how work was split across threads.

use serde::{Deserialize, Serialize};

const PAIRWISE_BLOCK: usize = 64;

/// Pairwise (tree) summation with a fixed split rule.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Unbiased sample variance around `center`.
pub fn variance_about(values: &[f64], center: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - center) * (v - center)).collect();
    pairwise_sum(&sq) / (values.len() - 1) as f64
}

/// Sample mean and its Monte Carlo standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = mean(values);
    let var = variance_about(values, m);
    (m, (var / values.len() as f64).sqrt())
}

/// Least-squares line through `(xs, ys)`; returns `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let sxy: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let slope = pairwise_sum(&sxy) / pairwise_sum(&sxx);
    (slope, my - slope * mx)
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Point estimate with Monte Carlo error and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    /// Self-normalized importance-sampling estimate and its delta-method
    /// standard error, when the estimator is weighted.
    pub self_normalized: Option<(f64, f64)>,
    /// Set when the standard error exceeds the configured sanity ceiling.
    pub heavy_tail: bool,
}

impl EstimatorResult {
    pub fn from_samples(values: &[f64], seed: u64) -> Self {
        let (estimate, std_error) = mean_and_se(values);
        Self {
            estimate,
            std_error,
            samples: values.len(),
            seed,
            self_normalized: None,
            heavy_tail: false,
        }
    }

    /// |self - other| within `k` combined standard errors plus `slack`.
    pub fn agrees_with(&self, other: &EstimatorResult, k: f64, slack: f64) -> bool {
        let combined = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        (self.estimate - other.estimate).abs() <= k * combined + slack
    }

    /// |self - target| within `k` standard errors plus `slack`.
    pub fn within(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.estimate - target).abs() <= k * self.std_error + slack
    }

    pub(crate) fn flag_ceiling(mut self, ceiling: f64) -> Self {
        self.heavy_tail = !(self.std_error <= ceiling);
        self
    }
}
