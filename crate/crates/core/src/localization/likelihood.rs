use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// How per-observation inconsistency log terms are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    Sum,
    Mean,
}

/// `log N(x; 0, sigma²)`.
pub fn log_normal_pdf(x: f64, sigma: f64) -> f64 {
    -0.5 * (x / sigma).powi(2) - (sigma * (2.0 * PI).sqrt()).ln()
}

/// Log of the product of zero-mean Gaussians evaluated at the distances.
pub fn geometric_log_likelihood(distances: &[f64], sigma_geo: f64) -> f64 {
    debug_assert!(sigma_geo > 0.0);
    distances.iter().map(|&d| log_normal_pdf(d, sigma_geo)).sum()
}

/// Gaussian log-likelihood of the semantic inconsistencies.
pub fn inconsistency_log_likelihood(incons: &[f64], sigma_sem: f64, aggregation: Aggregation) -> f64 {
    debug_assert!(sigma_sem > 0.0);
    let total: f64 = incons.iter().map(|&i| log_normal_pdf(i, sigma_sem)).sum();
    match aggregation {
        Aggregation::Sum => total,
        Aggregation::Mean if incons.is_empty() => 0.0,
        Aggregation::Mean => total / incons.len() as f64,
    }
}

/// Numerically stable `log Σ exp(v)`; `-inf` for empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_oracles::normal_pdf;

    #[test]
    fn geometric_examples() {
        assert_eq!(geometric_log_likelihood(&[], 1.0), 0.0);
        assert!((geometric_log_likelihood(&[0.0], 1.0) - (-0.918_938_533_2)).abs() < 1e-9);
        let oracle = (normal_pdf(1.0, 1.0) * normal_pdf(2.0, 1.0)).ln();
        assert!((oracle - (-4.337_877_066)).abs() < 1e-8);
        assert!((geometric_log_likelihood(&[1.0, 2.0], 1.0) - oracle).abs() < 1e-12);
    }

    #[test]
    fn inconsistency_examples() {
        let sigma = 0.5;
        let n = 4;
        let best = n as f64 * (1.0 / (sigma * (2.0 * PI).sqrt())).ln();
        assert!((inconsistency_log_likelihood(&[0.0; 4], sigma, Aggregation::Sum) - best).abs() < 1e-12);

        let oracle = normal_pdf(1.0, 0.5).ln();
        assert!((normal_pdf(1.0, 0.5) - 0.1080).abs() < 1e-4);
        assert!((oracle - (-2.2258)).abs() < 1e-4);
        assert!((inconsistency_log_likelihood(&[1.0], sigma, Aggregation::Sum) - oracle).abs() < 1e-12);

        let mut prev = f64::INFINITY;
        for step in 0..=20 {
            let v = inconsistency_log_likelihood(&[0.3, step as f64 * 0.1], sigma, Aggregation::Sum);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn mean_aggregation() {
        let s = inconsistency_log_likelihood(&[0.2, 0.6], 0.5, Aggregation::Sum);
        let m = inconsistency_log_likelihood(&[0.2, 0.6], 0.5, Aggregation::Mean);
        assert!((m - s / 2.0).abs() < 1e-12);
        assert_eq!(inconsistency_log_likelihood(&[], 0.5, Aggregation::Mean), 0.0);
    }

    #[test]
    fn lse_is_stable() {
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}
