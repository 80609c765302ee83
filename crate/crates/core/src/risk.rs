//! Asymptotic risk measures built from tail constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactEngine;
use crate::model::MarketScenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMeasure {
    VaR,
    CoTE,
}

/// Asymptotic approximation of a risk measure over a grid of levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskMeasureCurve {
    pub kind: RiskMeasure,
    pub level_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub constant: f64,
    pub alpha: f64,
}

fn check_level(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    Ok(())
}

fn check_constant(constant: f64, alpha: f64) -> Result<()> {
    if !(constant >= 0.0) || !constant.is_finite() {
        return Err(Error::InvalidArgument("constant must be finite and >= 0".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    Ok(())
}

/// `VaR_{1-gamma} ~ C^{1/alpha} gamma^{-1/alpha}`.
pub fn var_asymptotic(constant: f64, alpha: f64, gamma: f64) -> Result<f64> {
    check_constant(constant, alpha)?;
    check_level(gamma)?;
    if constant == 0.0 {
        return Ok(0.0);
    }
    Ok((constant / gamma).powf(1.0 / alpha))
}

/// `CoTE_{1-gamma} ~ alpha / (alpha - 1) * VaR_{1-gamma}`.
pub fn cote_asymptotic(constant: f64, alpha: f64, gamma: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::InfiniteMean { alpha });
    }
    Ok(alpha / (alpha - 1.0) * var_asymptotic(constant, alpha, gamma)?)
}

pub fn risk_curve(kind: RiskMeasure, constant: f64, alpha: f64, levels: &[f64]) -> Result<RiskMeasureCurve> {
    let values = levels
        .iter()
        .map(|&g| match kind {
            RiskMeasure::VaR => var_asymptotic(constant, alpha, g),
            RiskMeasure::CoTE => cote_asymptotic(constant, alpha, g),
        })
        .collect::<Result<_>>()?;
    Ok(RiskMeasureCurve {
        kind,
        level_grid: levels.to_vec(),
        values,
        constant,
        alpha,
    })
}

/// `D = 1 - (C^S_ind)^{1/alpha} / sum_i (C^i_ind)^{1/alpha}`.
pub fn diversification_benefit(s: &MarketScenario) -> Result<f64> {
    diversification_benefit_with(&ExactEngine::default(), s)
}

pub fn diversification_benefit_with(engine: &ExactEngine, s: &MarketScenario) -> Result<f64> {
    if !s.norm.is_one() {
        return Err(Error::Unsupported(
            "diversification benefit is defined for the 1-norm".into(),
        ));
    }
    let alpha = s.alpha();
    let mut unrestricted = 0.0;
    for i in 0..s.agents() {
        unrestricted += engine.individual_constant_ind(s, i)?.value.powf(1.0 / alpha);
    }
    if !(unrestricted > 0.0) {
        return Err(Error::Degenerate);
    }
    let systemic = engine.systemic_constant_ind(s)?.value;
    Ok(1.0 - systemic.powf(1.0 / alpha) / unrestricted)
}

/// Result of comparing one pair of constants against the known ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Independent constant should not exceed the dependent one.
    IndAtMostDep,
    /// Dependent constant should not exceed the independent one.
    DepAtMostInd,
    /// Both orderings apply.
    Equal,
    /// No bound asserted for this `(alpha, r)`.
    NoBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    /// `Some(i)` for agent `i`, `None` for the systemic constant.
    pub agent: Option<usize>,
    pub ind: f64,
    pub dep: f64,
    pub expectation: Expectation,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub alpha: f64,
    pub r: f64,
    pub checks: Vec<OrderingCheck>,
}

impl OrderingReport {
    pub fn violations(&self) -> impl Iterator<Item = &OrderingCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }

    pub fn all_hold(&self) -> bool {
        self.violations().next().is_none()
    }
}

/// Relative slack for comparisons of numerically computed constants.
const ORDER_SLACK: f64 = 1e-12;

fn holds(e: Expectation, ind: f64, dep: f64) -> bool {
    let slack = ORDER_SLACK * ind.abs().max(dep.abs()).max(1.0);
    match e {
        Expectation::IndAtMostDep => ind <= dep + slack,
        Expectation::DepAtMostInd => dep <= ind + slack,
        Expectation::Equal => (ind - dep).abs() <= slack,
        Expectation::NoBound => true,
    }
}

fn individual_expectation(alpha: f64) -> Expectation {
    if alpha == 1.0 {
        Expectation::Equal
    } else if alpha > 1.0 {
        Expectation::IndAtMostDep
    } else {
        Expectation::DepAtMostInd
    }
}

fn systemic_expectation(alpha: f64, r: f64) -> Expectation {
    if alpha < 1.0 {
        Expectation::DepAtMostInd
    } else if alpha >= r {
        if alpha == 1.0 && r == 1.0 {
            Expectation::Equal
        } else {
            Expectation::IndAtMostDep
        }
    } else {
        Expectation::NoBound
    }
}

/// Compares independent and dependent constants against the orderings
/// implied by convexity of `x^alpha` and the norm inequalities.
pub fn ordering_report(s: &MarketScenario) -> Result<OrderingReport> {
    ordering_report_with(&ExactEngine::default(), s)
}

pub fn ordering_report_with(engine: &ExactEngine, s: &MarketScenario) -> Result<OrderingReport> {
    let alpha = s.alpha();
    let r = s.norm.r;
    let mut checks = Vec::with_capacity(s.agents() + 1);
    let ei = individual_expectation(alpha);
    for i in 0..s.agents() {
        let ind = engine.individual_constant_ind(s, i)?.value;
        let dep = engine.individual_constant_dep(s, i)?.value;
        checks.push(OrderingCheck {
            agent: Some(i),
            ind,
            dep,
            expectation: ei,
            holds: holds(ei, ind, dep),
        });
    }
    let es = systemic_expectation(alpha, r);
    let ind = engine.systemic_constant_ind(s)?.value;
    let dep = engine.systemic_constant_dep(s)?.value;
    checks.push(OrderingCheck {
        agent: None,
        ind,
        dep,
        expectation: es,
        holds: holds(es, ind, dep),
    });
    Ok(OrderingReport { alpha, r, checks })
}
