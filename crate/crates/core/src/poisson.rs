//! Poisson approximations for large markets with proportional weights.
//!
//! Degrees are Poisson-binomial; replacing them by Poisson variables gives
//! constants expressed through (fractional) Poisson moments, together with
//! Stein-Chen total-variation error bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MarketScenario, ProbMatrix, WeightScheme};
use crate::numeric::{compensated_sum, pow0, DiscreteLaw, NeumaierSum};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_TERMS: usize = 1_000_000;
/// Mass below which atoms of large convolved laws are discarded.
const PRUNE_FLOOR: f64 = 1e-14;
/// Pairwise support size above which convolutions are pruned and binned.
const REDUCE_ABOVE: usize = 1_000_000;
/// Bin width for large laws, relative to the largest attainable value.
const BIN_WIDTH: f64 = 1e-6;

/// Convolution of nonnegative laws on `[0, top]`; once the support grows
/// large, light atoms are dropped and values binned.
struct Reduced {
    law: DiscreteLaw,
    dropped: f64,
    shift: f64,
}

impl Reduced {
    fn convolve_all(laws: &[DiscreteLaw], top: f64, cap: usize) -> Result<Self> {
        let h = BIN_WIDTH * top;
        let mut r = Self { law: DiscreteLaw::point(0.0), dropped: 0.0, shift: 0.0 };
        for l in laws {
            if r.law.len() * l.len() > REDUCE_ABOVE {
                let (law, dropped) = std::mem::replace(&mut r.law, DiscreteLaw::point(0.0)).prune(PRUNE_FLOOR);
                r.law = law.convolve_binned(l, h);
                r.dropped += dropped;
                r.shift += h;
            } else {
                r.law = r.law.convolve(l, cap)?;
            }
        }
        Ok(r)
    }

    /// Bound on the change of the `alpha`-moment caused by the reduction.
    fn extra(&self, alpha: f64, top: f64) -> f64 {
        if self.shift == 0.0 && self.dropped == 0.0 {
            return 0.0;
        }
        let d = self.shift;
        let moved = if alpha >= 1.0 {
            alpha * d * self.law.expect(|x| (x + 2.0 * d).powf(alpha - 1.0))
        } else {
            d.powf(alpha)
        };
        self.dropped * pow0(top, alpha) + moved
    }
}

/// Which function of `X ~ Pois(lambda)` is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shift {
    /// `E X^kappa`, with `0^kappa = 0` for `kappa > 0`.
    None,
    /// `E (1 + X)^kappa`.
    PlusOne,
}

impl Shift {
    fn base(self, n: usize) -> f64 {
        match self {
            Shift::None => n as f64,
            Shift::PlusOne => n as f64 + 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonApprox {
    pub value: f64,
    /// Error radius from the Poisson approximation theorem.
    pub bound: f64,
    /// Poisson means used, one per object.
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependentApprox {
    pub individual: Vec<PoissonApprox>,
    pub systemic: PoissonApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UninsuredApprox {
    pub tail_constant_ind: PoissonApprox,
    pub tail_constant_dep: PoissonApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountApprox {
    pub lambda: f64,
    pub tv_bound: f64,
}

/// Poisson pmf terms `P(X = n)` for `n = 0, 1, ...` computed in log space.
struct PoissonTerms {
    log_lambda: f64,
    n: usize,
    log_pmf: f64,
}

impl PoissonTerms {
    fn new(lambda: f64) -> Self {
        Self {
            log_lambda: lambda.ln(),
            n: 0,
            log_pmf: -lambda,
        }
    }
}

impl Iterator for PoissonTerms {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        let out = (self.n, self.log_pmf.exp());
        self.n += 1;
        self.log_pmf += self.log_lambda - (self.n as f64).ln();
        Some(out)
    }
}

/// Bound on `sum_{m >= n} P(X = m) f(m)` given `P(X = n) f(n)`, valid once
/// the term ratio is below one. Both `lambda / (m + 1)` and
/// `f(m + 1) / f(m)` are nonincreasing in `m` for power functions.
fn tail_from(term: f64, lambda: f64, n: usize, exponent: f64, shift: Shift) -> Option<f64> {
    let b = shift.base(n);
    if b == 0.0 {
        return None;
    }
    let growth = (shift.base(n + 1) / b).powf(exponent).max(1.0);
    let ratio = lambda / (n as f64 + 1.0) * growth;
    (ratio < 1.0).then(|| term / (1.0 - ratio))
}

/// `E f(X)` for `X ~ Pois(lambda)` and `f(n) = n^kappa` or `(1 + n)^kappa`,
/// truncated once the remaining tail is provably below `tol`.
pub fn poisson_moment(lambda: f64, exponent: f64, shift: Shift, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument("lambda must be finite and >= 0".into()));
    }
    let f = |n: usize| pow0(shift.base(n), exponent);
    if lambda == 0.0 {
        return Ok(f(0));
    }
    let mut sum = NeumaierSum::new();
    for (n, pmf) in PoissonTerms::new(lambda).take(MAX_TERMS) {
        let term = pmf * f(n);
        sum.add(term);
        if n as f64 > lambda {
            let next = pmf * lambda / (n as f64 + 1.0) * f(n + 1);
            if let Some(tail) = tail_from(next, lambda, n + 1, exponent, shift) {
                if tail < tol {
                    return Ok(sum.value());
                }
            }
        }
    }
    Err(Error::NonConvergent {
        tol,
        terms: MAX_TERMS,
    })
}

/// Poisson pmf up to the first `n` whose upper tail is below `tol`; the
/// remaining mass is folded into the last atom.
pub fn truncated_pmf(lambda: f64, tol: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument("lambda must be finite and >= 0".into()));
    }
    if lambda == 0.0 {
        return Ok(vec![1.0]);
    }
    let mut pmf = Vec::new();
    let mut cum = NeumaierSum::new();
    for (n, p) in PoissonTerms::new(lambda).take(MAX_TERMS) {
        pmf.push(p);
        cum.add(p);
        if n as f64 > lambda {
            let next = p * lambda / (n as f64 + 1.0);
            if let Some(tail) = tail_from(next, lambda, n + 1, 0.0, Shift::PlusOne) {
                if tail < tol {
                    let rest = (1.0 - cum.value()).max(0.0);
                    *pmf.last_mut().unwrap() += rest;
                    return Ok(pmf);
                }
            }
        }
    }
    Err(Error::NonConvergent {
        tol,
        terms: MAX_TERMS,
    })
}

fn min_inv(lambda: f64) -> f64 {
    if lambda <= 1.0 {
        1.0
    } else {
        1.0 / lambda
    }
}

/// Poisson approximations with a configurable series tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonApproximator {
    pub tol: f64,
    pub support_cap: usize,
}

impl Default for PoissonApproximator {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            support_cap: 2_000_000,
        }
    }
}

struct Market {
    p: ProbMatrix,
    alpha: f64,
    scales: Vec<f64>,
    claim_scales: Vec<f64>,
}

impl Market {
    fn load(s: &MarketScenario, need_unit_norm: bool) -> Result<Self> {
        if !matches!(s.weights, WeightScheme::Proportional) {
            return Err(Error::Unsupported(
                "Poisson approximations require proportional weights".into(),
            ));
        }
        if need_unit_norm && !s.norm.is_one() {
            return Err(Error::Unsupported(
                "Poisson approximation of systemic constants is only available for r = 1".into(),
            ));
        }
        let p = s.checked_probabilities()?;
        Ok(Self {
            p,
            alpha: s.claims.alpha,
            scales: s.claims.scales.clone(),
            claim_scales: s.claims.claim_scales(),
        })
    }

    /// `(lambda_j^i, sum_{k != i} p_kj^2)`; with `i = None` nobody is excluded.
    fn column_stats(&self, j: usize, exclude: Option<usize>) -> (f64, f64) {
        let col = self.p.column(j);
        let keep = |k: &usize| Some(*k) != exclude;
        let lambda = compensated_sum((0..col.len()).filter(keep).map(|k| col[k]));
        let squares = compensated_sum((0..col.len()).filter(keep).map(|k| col[k] * col[k]));
        (lambda, squares)
    }

    fn check_agent(&self, i: usize) -> Result<()> {
        if i >= self.p.agents() {
            return Err(Error::IndexOutOfRange {
                kind: "agent",
                index: i,
                len: self.p.agents(),
            });
        }
        Ok(())
    }

    fn dependent_scale(&self) -> f64 {
        self.claim_scales.iter().sum::<f64>().powf(self.alpha)
    }
}

impl PoissonApproximator {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    /// `C^i_ind ~ sum_j K_j p_ij E(1 + X_j^i)^{-alpha}`.
    pub fn individual_constant(&self, s: &MarketScenario, i: usize) -> Result<PoissonApprox> {
        let m = Market::load(s, false)?;
        m.check_agent(i)?;
        let (mut value, mut bound) = (NeumaierSum::new(), NeumaierSum::new());
        let mut lambdas = Vec::with_capacity(m.p.objects());
        for j in 0..m.p.objects() {
            let (lambda, squares) = m.column_stats(j, Some(i));
            lambdas.push(lambda);
            let w = m.scales[j] * m.p.get(i, j);
            if w == 0.0 {
                continue;
            }
            value.add(w * poisson_moment(lambda, -m.alpha, Shift::PlusOne, self.tol)?);
            bound.add(w * min_inv(lambda) * squares);
        }
        Ok(PoissonApprox {
            value: value.value(),
            bound: bound.value(),
            lambda: lambdas,
        })
    }

    /// `C^S_ind ~ sum_j K_j (1 - e^{-lambda_j})` under the 1-norm.
    pub fn systemic_constant(&self, s: &MarketScenario) -> Result<PoissonApprox> {
        let m = Market::load(s, true)?;
        let (mut value, mut bound) = (NeumaierSum::new(), NeumaierSum::new());
        let mut lambdas = Vec::with_capacity(m.p.objects());
        for j in 0..m.p.objects() {
            let (lambda, squares) = m.column_stats(j, None);
            lambdas.push(lambda);
            value.add(-m.scales[j] * (-lambda).exp_m1());
            bound.add(m.scales[j] * min_inv(lambda) * squares);
        }
        Ok(PoissonApprox {
            value: value.value(),
            bound: bound.value(),
            lambda: lambdas,
        })
    }

    /// Fully dependent claims: individual and systemic approximations.
    pub fn dependent_constants(&self, s: &MarketScenario) -> Result<DependentApprox> {
        let m = Market::load(s, true)?;
        let (q, d) = (m.p.agents(), m.p.objects());
        let scale = m.dependent_scale();
        let mut individual = Vec::with_capacity(q);
        for i in 0..q {
            let mut laws = Vec::with_capacity(d);
            let mut lambdas = Vec::with_capacity(d);
            let mut bound = NeumaierSum::new();
            for j in 0..d {
                let (lambda, squares) = m.column_stats(j, Some(i));
                lambdas.push(lambda);
                bound.add(min_inv(lambda) * squares);
                let pij = m.p.get(i, j);
                if pij == 0.0 {
                    continue;
                }
                let c = m.claim_scales[j];
                let mut atoms = vec![(0.0, 1.0 - pij)];
                atoms.extend(
                    truncated_pmf(lambda, self.tol)?
                        .into_iter()
                        .enumerate()
                        .map(|(n, w)| (c / (n as f64 + 1.0), pij * w)),
                );
                laws.push(DiscreteLaw::from_atoms(atoms));
            }
            let top: f64 = m.claim_scales.iter().sum();
            let r = Reduced::convolve_all(&laws, top, self.support_cap)?;
            individual.push(PoissonApprox {
                value: r.law.moment(m.alpha),
                bound: d as f64 * scale * bound.value() + r.extra(m.alpha, top),
                lambda: lambdas,
            });
        }
        let mut lambdas = Vec::with_capacity(d);
        let mut bound = NeumaierSum::new();
        let mut acc = DiscreteLaw::point(0.0);
        for j in 0..d {
            let (lambda, squares) = m.column_stats(j, None);
            lambdas.push(lambda);
            bound.add(min_inv(lambda) * squares);
            let law = DiscreteLaw::two_point(m.claim_scales[j], -(-lambda).exp_m1());
            acc = acc.convolve(&law, self.support_cap)?;
        }
        Ok(DependentApprox {
            individual,
            systemic: PoissonApprox {
                value: acc.moment(m.alpha),
                bound: d as f64 * scale * bound.value(),
                lambda: lambdas,
            },
        })
    }

    /// Uninsured-loss constants with `X_j ~ Pois(pi_j)` replacing `1(deg(j) = 0)`.
    pub fn uninsured(&self, s: &MarketScenario) -> Result<UninsuredApprox> {
        let m = Market::load(s, false)?;
        let d = m.p.objects();
        let pis: Vec<f64> = (0..d).map(|j| m.p.uninsured_prob(j)).collect();
        let bound = compensated_sum(pis.iter().map(|x| x * x));
        let mut ind = NeumaierSum::new();
        for (j, &pi) in pis.iter().enumerate() {
            ind.add(m.scales[j] * poisson_moment(pi, m.alpha, Shift::None, self.tol)?);
        }
        let equal = m.scales.iter().all(|&k| k == m.scales[0]);
        let (dep, pruned) = if equal {
            let total = compensated_sum(pis.iter().copied());
            (m.scales[0] * poisson_moment(total, m.alpha, Shift::None, self.tol)?, 0.0)
        } else {
            let mut laws = Vec::with_capacity(d);
            let mut top = 0.0;
            for (j, &pi) in pis.iter().enumerate() {
                let c = m.claim_scales[j];
                let law = DiscreteLaw::from_atoms(
                    truncated_pmf(pi, self.tol)?
                        .into_iter()
                        .enumerate()
                        .map(|(n, w)| (c * n as f64, w))
                        .collect(),
                );
                top += law.max_value().unwrap_or(0.0);
                laws.push(law);
            }
            let r = Reduced::convolve_all(&laws, top, self.support_cap)?;
            (r.law.moment(m.alpha), r.extra(m.alpha, top))
        };
        Ok(UninsuredApprox {
            tail_constant_ind: PoissonApprox {
                value: ind.value(),
                bound,
                lambda: pis.clone(),
            },
            tail_constant_dep: PoissonApprox {
                value: dep,
                bound: bound + pruned,
                lambda: pis,
            },
        })
    }
}

pub fn approx_individual_constant(s: &MarketScenario, i: usize) -> Result<PoissonApprox> {
    PoissonApproximator::default().individual_constant(s, i)
}

pub fn approx_systemic_constant(s: &MarketScenario) -> Result<PoissonApprox> {
    PoissonApproximator::default().systemic_constant(s)
}

pub fn approx_dep_constants(s: &MarketScenario) -> Result<DependentApprox> {
    PoissonApproximator::default().dependent_constants(s)
}

pub fn uninsured_poisson(s: &MarketScenario) -> Result<UninsuredApprox> {
    PoissonApproximator::default().uninsured(s)
}

/// Poisson approximation of the number of uninsured objects.
pub fn noninsured_count_approx(s: &MarketScenario) -> Result<CountApprox> {
    let p = s.checked_probabilities()?;
    let pis: Vec<f64> = (0..p.objects()).map(|j| p.uninsured_prob(j)).collect();
    let lambda = compensated_sum(pis.iter().copied());
    let squares = compensated_sum(pis.iter().map(|x| x * x));
    Ok(CountApprox {
        lambda,
        tv_bound: min_inv(lambda) * squares,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactEngine;
    use crate::model::{ClaimSpec, Dependence, EdgeModel};

    fn homogeneous(q: usize, d: usize, p: f64, alpha: f64) -> MarketScenario {
        MarketScenario::new(
            EdgeModel::Homogeneous { q, d, p },
            ClaimSpec::unit(alpha, d, Dependence::AsymptoticallyIndependent),
        )
    }

    #[test]
    fn moments_match_closed_forms() {
        assert_eq!(poisson_moment(0.0, -1.3, Shift::PlusOne, 1e-12).unwrap(), 1.0);
        for lambda in [0.01, 0.7, 3.0, 25.0, 400.0] {
            let m = poisson_moment(lambda, -1.0, Shift::PlusOne, 1e-14).unwrap();
            let exact = -(-lambda).exp_m1() / lambda;
            assert!((m - exact).abs() < 1e-12, "{lambda}: {m} vs {exact}");
            let mean = poisson_moment(lambda, 1.0, Shift::None, 1e-12).unwrap();
            assert!((mean - lambda).abs() < 1e-9 * lambda.max(1.0));
            let second = poisson_moment(lambda, 2.0, Shift::None, 1e-12).unwrap();
            assert!((second - lambda * (1.0 + lambda)).abs() < 1e-9 * second.max(1.0));
        }
    }

    #[test]
    fn truncation_is_stable_under_tighter_tolerance() {
        for (lambda, k) in [(0.3, 0.7), (5.0, 2.5), (50.0, -1.5)] {
            let a = poisson_moment(lambda, k, Shift::PlusOne, 1e-10).unwrap();
            let b = poisson_moment(lambda, k, Shift::PlusOne, 1e-15).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(poisson_moment(1.0, 1.0, Shift::None, 0.0).is_err());
        assert!(poisson_moment(-1.0, 1.0, Shift::None, 1e-9).is_err());
        let s = homogeneous(3, 2, 0.2, 1.5).with_weights(WeightScheme::Compensated { r: 2.0 });
        assert!(matches!(approx_systemic_constant(&s), Err(Error::Unsupported(_))));
    }

    #[test]
    fn lone_agent_is_exact() {
        let s = MarketScenario::new(
            EdgeModel::Explicit {
                p: vec![vec![0.4, 0.7], vec![0.0, 0.0]],
            },
            ClaimSpec::new(1.7, vec![1.0, 2.0], Dependence::AsymptoticallyIndependent),
        );
        let a = approx_individual_constant(&s, 0).unwrap();
        assert!((a.value - (0.4 + 2.0 * 0.7)).abs() < 1e-14);
        assert_eq!(a.bound, 0.0);
    }

    #[test]
    fn homogeneous_bounds_match_remark_and_hold() {
        let (q, d, p) = (10, 5, 0.05);
        let s = homogeneous(q, d, p, 1.5);
        let e = ExactEngine::default();
        let ind = approx_individual_constant(&s, 0).unwrap();
        let qm = (q - 1) as f64 * p;
        let expected = d as f64 * p * min_inv(qm) * (q - 1) as f64 * p * p;
        assert!((ind.bound - expected).abs() < 1e-15);
        let exact = e.individual_constant_ind(&s, 0).unwrap().value;
        assert!((ind.value - exact).abs() <= ind.bound);
        let sys = approx_systemic_constant(&s).unwrap();
        let qp = q as f64 * p;
        assert!((sys.bound - d as f64 * min_inv(qp) * q as f64 * p * p).abs() < 1e-15);
        let closed = d as f64 * (1.0 - (1.0 - p).powi(q as i32));
        assert!((sys.value - closed).abs() <= sys.bound);
    }

    #[test]
    fn dependent_systemic_within_bound() {
        let s = homogeneous(8, 4, 0.1, 0.8);
        let a = approx_dep_constants(&s).unwrap();
        let exact = ExactEngine::default().systemic_constant_dep(&s).unwrap().value;
        assert!((a.systemic.value - exact).abs() <= a.systemic.bound);
        let one = homogeneous(3, 1, 0.2, 1.3);
        let a = approx_dep_constants(&one).unwrap();
        assert!((a.systemic.value - (1.0 - (-0.6f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn certain_coverage_has_no_uninsured_mass() {
        let s = homogeneous(3, 4, 1.0, 1.5);
        let u = uninsured_poisson(&s).unwrap();
        assert_eq!(u.tail_constant_ind.value, 0.0);
        assert_eq!(u.tail_constant_dep.value, 0.0);
        assert_eq!(u.tail_constant_ind.bound, 0.0);
        let c = noninsured_count_approx(&s).unwrap();
        assert_eq!((c.lambda, c.tv_bound), (0.0, 0.0));
    }

    #[test]
    fn count_approx_arithmetic() {
        let c = noninsured_count_approx(&homogeneous(3, 2, 0.5, 1.0)).unwrap();
        assert!((c.lambda - 0.25).abs() < 1e-15);
        assert!((c.tv_bound - 0.03125).abs() < 1e-15);
    }

    #[test]
    fn uninsured_dependent_paths_agree() {
        let s = homogeneous(4, 3, 0.3, 1.7);
        let equal = uninsured_poisson(&s).unwrap().tail_constant_dep.value;
        let mut k = s.clone();
        k.claims.scales = vec![1.0, 1.0, 1.0 + 1e-15];
        let conv = uninsured_poisson(&k).unwrap().tail_constant_dep.value;
        assert!((equal - conv).abs() < 1e-9, "{equal} {conv}");
    }
}
