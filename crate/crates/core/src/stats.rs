//! Goodness-of-fit and summary statistics used by oracle verification and reports.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Minimum expected count per cell before pooling.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl ChiSquareResult {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Pearson chi-square test of `observed` counts against probabilities `pmf`.
///
/// Cells with expected count below 5 are pooled. Any observation in a cell of
/// probability zero yields `p = 0`.
pub fn chi_square_gof(observed: &[u64], pmf: &[f64]) -> ChiSquareResult {
    assert_eq!(observed.len(), pmf.len(), "observed and pmf lengths differ");
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    if observed.iter().zip(pmf).any(|(&o, &p)| p <= 0.0 && o > 0) {
        return ChiSquareResult { statistic: f64::INFINITY, df: 0, p_value: 0.0 };
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(pmf) {
        let e = n * p;
        if e >= MIN_EXPECTED {
            bins.push((o as f64, e));
        } else {
            pooled_obs += o as f64;
            pooled_exp += e;
        }
    }
    if pooled_exp > 0.0 {
        if pooled_exp >= MIN_EXPECTED || bins.is_empty() {
            bins.push((pooled_obs, pooled_exp));
        } else {
            let smallest = bins.iter_mut().min_by(|a, b| a.1.total_cmp(&b.1)).expect("bins is non-empty");
            smallest.0 += pooled_obs;
            smallest.1 += pooled_exp;
        }
    }
    if bins.len() < 2 {
        return ChiSquareResult { statistic: 0.0, df: 0, p_value: 1.0 };
    }
    let statistic: f64 = bins.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = bins.len() - 1;
    let p_value = ChiSquared::new(df as f64).expect("df >= 1").sf(statistic);
    ChiSquareResult { statistic, df, p_value }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
