//! Scenarios shared by the benchmarks.

use netrisk::{ClaimSpec, Dependence, EdgeModel, MarketScenario};

/// Homogeneous market with `q` agents and `d` unit-scale objects.
pub fn homogeneous(q: usize, d: usize, p: f64, alpha: f64, dependence: Dependence) -> MarketScenario {
    MarketScenario::new(EdgeModel::Homogeneous { q, d, p }, ClaimSpec::unit(alpha, d, dependence))
}

/// Explicit market whose probabilities and scales vary by position.
pub fn mixed(q: usize, d: usize, alpha: f64, dependence: Dependence) -> MarketScenario {
    let p = (0..q)
        .map(|i| (0..d).map(|j| 0.1 + 0.8 * (((i * 7 + j * 3) % 11) as f64) / 10.0).collect())
        .collect();
    let k = (0..d).map(|j| 1.0 + (j % 3) as f64).collect();
    MarketScenario::new(EdgeModel::Explicit { p }, ClaimSpec::new(alpha, k, dependence))
}
