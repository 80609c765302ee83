//! Interval helpers for Monte Carlo reporting.

use statrs::distribution::{ContinuousCDF, Normal};

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(p)
}

/// Two-sided normal-approximation half-width for a binomial proportion
/// `k / n` at level `confidence`.
pub fn proportion_half_width(k: u64, n: u64, confidence: f64) -> f64 {
    let n = n as f64;
    let p = k as f64 / n;
    normal_quantile(0.5 + confidence / 2.0) * (p * (1.0 - p) / n).sqrt()
}

/// One-sided Clopper-Pearson upper bound for a proportion with zero
/// successes in `n` trials: `1 - (1 - confidence)^{1/n}`.
pub fn zero_count_upper_bound(n: u64, confidence: f64) -> f64 {
    1.0 - (1.0 - confidence).powf(1.0 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert!((normal_quantile(0.995) - 2.5758293035489).abs() < 1e-9);
    }

    #[test]
    fn rule_of_three() {
        let u = zero_count_upper_bound(1000, 0.95);
        assert!((u * 1000.0 - 2.9957).abs() < 1e-2);
    }
}
