//! Exact tail constants of the exposure vector `F = A V`.
//!
//! Edges of different objects are independent, so every quantity that
//! decomposes over objects is computed from per-object degree laws
//! ([`DegreeLaw`]) and, for sums across objects, by convolving finite
//! per-object laws. Quantities that couple objects through a non-additive
//! norm fall back to enumerating graph realizations, and beyond the
//! configured caps to sampling graphs (flagged as [`Method::MonteCarlo`]).

mod degree;
mod enumerate;
mod spectral;

use serde::{Deserialize, Serialize};

pub use degree::{degree_law, poisson_binomial, DegreeLaw};
pub use spectral::{SpectralAtom, SpectralMeasure};

use crate::error::{Error, Result};
use crate::graph::Realization;
use crate::model::{DegreeShare, Dependence, MarketScenario, ProbMatrix, WeightScheme};
use crate::numeric::{compensated_sum, pow0, DiscreteLaw, NeumaierSum};
use enumerate::GraphEnumerator;

/// Uninsured shares below this are treated as rounding noise.
const SHARE_SLACK: f64 = 1e-12;

/// How a number was obtained, ordered from most to least exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Convolution,
    Enumeration,
    MonteCarlo,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Convolution => "convolution",
            Method::Enumeration => "enumeration",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// A computed constant with its provenance. `error_radius` is zero for
/// exact methods and a confidence half-width for sampled ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub method: Method,
    pub error_radius: f64,
}

impl Estimate {
    pub fn exact(value: f64, method: Method) -> Self {
        Self {
            value,
            method,
            error_radius: 0.0,
        }
    }
}

/// Constants `{C^i}`, `C^S` and `B` for one dependence regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskConstants {
    pub per_agent: Vec<f64>,
    pub systemic: f64,
    /// `None` when the weight scheme can allocate more than the whole claim.
    pub uninsured: Option<f64>,
    pub regime: Dependence,
    pub method: Method,
    pub error_radius: f64,
}

/// Sampling fallback used when an exact route exceeds its cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McFallback {
    pub replicates: u64,
    pub seed: u64,
    pub confidence: f64,
}

impl Default for McFallback {
    fn default() -> Self {
        Self {
            replicates: 200_000,
            seed: 0x5eed,
            confidence: 0.99,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Largest `q` for enumerating the `2^q - 1` sphere points.
    pub sphere_cap_agents: usize,
    /// Largest number of random edges for full-graph enumeration.
    pub graph_cap_edges: usize,
    /// Largest pairwise support product in a single convolution step.
    pub support_cap: usize,
    pub mc_fallback: Option<McFallback>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            sphere_cap_agents: 20,
            graph_cap_edges: 25,
            support_cap: 2_000_000,
            mc_fallback: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExactEngine {
    pub config: EngineConfig,
}

struct Prepared {
    p: ProbMatrix,
    alpha: f64,
    scales: Vec<f64>,
    claim_scales: Vec<f64>,
}

impl Prepared {
    fn new(s: &MarketScenario) -> Result<Self> {
        let p = s.checked_probabilities()?;
        Ok(Self {
            p,
            alpha: s.claims.alpha,
            scales: s.claims.scales.clone(),
            claim_scales: s.claims.claim_scales(),
        })
    }

    fn column_law(&self, j: usize) -> DegreeLaw {
        degree_law(&self.p.column(j))
    }
}

fn check_agent(i: usize, q: usize) -> Result<()> {
    if i >= q {
        return Err(Error::IndexOutOfRange {
            kind: "agent",
            index: i,
            len: q,
        });
    }
    Ok(())
}

impl ExactEngine {
    pub fn new(config: EngineConfig) -> Self {
        Self { config }
    }

    pub fn with_fallback(fallback: McFallback) -> Self {
        Self::new(EngineConfig {
            mc_fallback: Some(fallback),
            ..EngineConfig::default()
        })
    }

    /// Runs `exact`; on a cap overflow either samples `f` over graphs or
    /// propagates the error.
    fn exact_or_sample<F>(
        &self,
        p: &ProbMatrix,
        exact: Result<Estimate>,
        f: F,
    ) -> Result<Estimate>
    where
        F: Fn(&Realization) -> f64 + Sync,
    {
        match exact {
            Err(Error::CapExceeded { .. }) if self.config.mc_fallback.is_some() => {
                let fb = self.config.mc_fallback.unwrap();
                let (value, radius) =
                    enumerate::sample_expectation(p, fb.replicates, fb.seed, fb.confidence, f);
                Ok(Estimate {
                    value,
                    method: Method::MonteCarlo,
                    error_radius: radius,
                })
            }
            other => other,
        }
    }

    fn enumerate<F>(&self, p: &ProbMatrix, f: F) -> Result<Estimate>
    where
        F: Fn(&Realization) -> f64 + Sync,
    {
        let exact = GraphEnumerator::new(p, self.config.graph_cap_edges)
            .map(|e| Estimate::exact(e.expect(&f), Method::Enumeration));
        self.exact_or_sample(p, exact, f)
    }

    /// `C^i_ind = sum_j K_j E A_ij^alpha`.
    pub fn individual_constant_ind(&self, s: &MarketScenario, i: usize) -> Result<Estimate> {
        let m = Prepared::new(s)?;
        check_agent(i, m.p.agents())?;
        let mut total = NeumaierSum::new();
        let mut method = Method::ClosedForm;
        for j in 0..m.p.objects() {
            let pij = m.p.get(i, j);
            if pij == 0.0 {
                continue;
            }
            let moment = match s.weights.degree_share() {
                Some(share) => {
                    method = Method::Convolution;
                    let cond = m.column_law(j).conditional_pmf_excluding(i);
                    compensated_sum(
                        cond.iter()
                            .enumerate()
                            .map(|(l, &w)| w * share.share(l + 1).powf(m.alpha)),
                    )
                }
                None => pow0(s.weights.weight(i, j, 1), m.alpha),
            };
            total.add(m.scales[j] * pij * moment);
        }
        Ok(Estimate::exact(total.value(), method))
    }

    /// Law of agent `i`'s share of object `j` scaled by `c`:
    /// `c * A_ij`, where `A_ij` depends on the rest of the column.
    fn agent_share_law(
        &self,
        m: &Prepared,
        weights: &WeightScheme,
        i: usize,
        j: usize,
        c: f64,
    ) -> DiscreteLaw {
        let pij = m.p.get(i, j);
        match weights.degree_share() {
            Some(share) => {
                let cond = m.column_law(j).conditional_pmf_excluding(i);
                let mut atoms = Vec::with_capacity(cond.len() + 1);
                atoms.push((0.0, 1.0 - pij));
                atoms.extend(
                    cond.iter()
                        .enumerate()
                        .map(|(l, &w)| (c * share.share(l + 1), pij * w)),
                );
                DiscreteLaw::from_atoms(atoms)
            }
            None => DiscreteLaw::two_point(c * weights.weight(i, j, 1), pij),
        }
    }

    /// `C^i_dep = E (A K^{1/alpha} 1)_i^alpha`.
    pub fn individual_constant_dep(&self, s: &MarketScenario, i: usize) -> Result<Estimate> {
        let m = Prepared::new(s)?;
        check_agent(i, m.p.agents())?;
        let laws: Vec<DiscreteLaw> = (0..m.p.objects())
            .filter(|&j| m.p.get(i, j) > 0.0)
            .map(|j| self.agent_share_law(&m, &s.weights, i, j, m.claim_scales[j]))
            .collect();
        let exact = DiscreteLaw::convolve_all(&laws, self.config.support_cap)
            .map(|law| Estimate::exact(law.moment(m.alpha), Method::Convolution));
        let (alpha, c, weights) = (m.alpha, m.claim_scales.clone(), s.weights.clone());
        self.exact_or_sample(&m.p, exact, move |g| {
            let a = g.weighted(&weights);
            let d = g.objects();
            let x: f64 = (0..d).map(|j| a[i * d + j] * c[j]).sum();
            pow0(x, alpha)
        })
    }

    /// Law of `||A e_j||_r^alpha` for one object.
    fn column_norm_moment(&self, m: &Prepared, s: &MarketScenario, j: usize) -> Result<f64> {
        let law = m.column_law(j);
        match s.weights.degree_share() {
            Some(DegreeShare::Proportional) if s.norm.is_one() => Ok(law.prob_positive()),
            Some(share) => Ok(compensated_sum(law.pmf().iter().enumerate().skip(1).map(
                |(k, &w)| w * s.norm.norm_of_flat(share.share(k), k).powf(m.alpha),
            ))),
            None => {
                let r = s.norm.r;
                let q = m.p.agents();
                let mut acc = DiscreteLaw::point(0.0);
                for i in 0..q {
                    let w = s.weights.weight(i, j, 1);
                    if r.is_infinite() {
                        let step = DiscreteLaw::two_point(w, m.p.get(i, j));
                        acc = acc.combine(&step, self.config.support_cap, f64::max)?;
                    } else {
                        let step = DiscreteLaw::two_point(pow0(w, r), m.p.get(i, j));
                        acc = acc.convolve(&step, self.config.support_cap)?;
                    }
                }
                let e = if r.is_infinite() { m.alpha } else { m.alpha / r };
                Ok(acc.moment(e))
            }
        }
    }

    /// `C^S_ind = sum_j K_j E ||A e_j||^alpha` under the scenario's norm.
    pub fn systemic_constant_ind(&self, s: &MarketScenario) -> Result<Estimate> {
        let m = Prepared::new(s)?;
        let method = match s.weights.degree_share() {
            Some(DegreeShare::Proportional) if s.norm.is_one() => Method::ClosedForm,
            _ => Method::Convolution,
        };
        let exact = (|| {
            let mut total = NeumaierSum::new();
            for j in 0..m.p.objects() {
                total.add(m.scales[j] * self.column_norm_moment(&m, s, j)?);
            }
            Ok(Estimate::exact(total.value(), method))
        })();
        let (alpha, k, weights, norm) = (m.alpha, m.scales.clone(), s.weights.clone(), s.norm);
        self.exact_or_sample(&m.p, exact, move |g| {
            let a = g.weighted(&weights);
            let (q, d) = (g.agents(), g.objects());
            (0..d)
                .map(|j| {
                    let col: Vec<f64> = (0..q).map(|i| a[i * d + j]).collect();
                    k[j] * pow0(norm.norm(&col), alpha)
                })
                .sum()
        })
    }

    /// Law of the insured total `sum_i A_ij` of one object.
    fn column_total_law(&self, m: &Prepared, weights: &WeightScheme, j: usize) -> Result<DiscreteLaw> {
        let law = m.column_law(j);
        match weights.degree_share() {
            Some(DegreeShare::Proportional) => Ok(DiscreteLaw::two_point(1.0, law.prob_positive())),
            Some(share) => Ok(DiscreteLaw::from_atoms(
                law.pmf()
                    .iter()
                    .enumerate()
                    .map(|(k, &w)| (if k == 0 { 0.0 } else { k as f64 * share.share(k) }, w))
                    .collect(),
            )),
            None => {
                let mut acc = DiscreteLaw::point(0.0);
                for i in 0..m.p.agents() {
                    let step = DiscreteLaw::two_point(weights.weight(i, j, 1), m.p.get(i, j));
                    acc = acc.convolve(&step, self.config.support_cap)?;
                }
                Ok(acc)
            }
        }
    }

    /// `C^S_dep = E ||A K^{1/alpha} 1||^alpha`.
    pub fn systemic_constant_dep(&self, s: &MarketScenario) -> Result<Estimate> {
        let m = Prepared::new(s)?;
        let (alpha, c, weights, norm) = (m.alpha, m.claim_scales.clone(), s.weights.clone(), s.norm);
        let sampler = move |g: &Realization| {
            let a = g.weighted(&weights);
            pow0(norm.norm(&g.apply(&a, &c)), alpha)
        };
        if !s.norm.is_one() {
            return self.enumerate(&m.p, sampler);
        }
        let d = m.p.objects();
        let equal_scales = m.scales.iter().all(|&k| k == m.scales[0]);
        if matches!(s.weights, WeightScheme::Proportional) && equal_scales {
            // Number of insured objects is Poisson-binomial over P(deg(j) > 0).
            let insured = poisson_binomial((0..d).map(|j| 1.0 - m.p.uninsured_prob(j)));
            let c0 = m.claim_scales[0];
            let value = compensated_sum(
                insured
                    .iter()
                    .enumerate()
                    .map(|(l, &w)| w * pow0(c0 * l as f64, m.alpha)),
            );
            return Ok(Estimate::exact(value, Method::ClosedForm));
        }
        let exact = (|| {
            let mut acc = DiscreteLaw::point(0.0);
            for j in 0..d {
                let cj = m.claim_scales[j];
                let law = self.column_total_law(&m, &s.weights, j)?.map(|x| cj * x);
                acc = acc.convolve(&law, self.config.support_cap)?;
            }
            Ok(Estimate::exact(acc.moment(m.alpha), Method::Convolution))
        })();
        self.exact_or_sample(&m.p, exact, sampler)
    }

    /// Per-object law of the uninsured share `1 - sum_i A_ij`.
    fn uninsured_share_law(&self, m: &Prepared, weights: &WeightScheme, j: usize) -> Result<DiscreteLaw> {
        if matches!(weights, WeightScheme::Proportional) {
            return Ok(DiscreteLaw::two_point(1.0, m.p.uninsured_prob(j)));
        }
        let insured = self.column_total_law(m, weights, j)?;
        if let Some(top) = insured.max_value() {
            if top > 1.0 + SHARE_SLACK {
                return Err(Error::WeightSumViolated { object: j, sum: top });
            }
        }
        Ok(insured.map(|x| (1.0 - x).max(0.0)))
    }

    /// `B`: tail constant of the losses left uninsured.
    pub fn uninsured_constant(&self, s: &MarketScenario, regime: Dependence) -> Result<Estimate> {
        let m = Prepared::new(s)?;
        let d = m.p.objects();
        let proportional = matches!(s.weights, WeightScheme::Proportional);
        let laws: Vec<DiscreteLaw> = (0..d)
            .map(|j| self.uninsured_share_law(&m, &s.weights, j))
            .collect::<Result<_>>()?;
        match regime {
            Dependence::AsymptoticallyIndependent => {
                let value = compensated_sum(
                    laws.iter()
                        .zip(&m.scales)
                        .map(|(law, k)| k * law.moment(m.alpha)),
                );
                let method = if proportional {
                    Method::ClosedForm
                } else {
                    Method::Convolution
                };
                Ok(Estimate::exact(value, method))
            }
            Dependence::FullyDependent => {
                let exact = (|| {
                    let mut acc = DiscreteLaw::point(0.0);
                    for (law, &c) in laws.iter().zip(&m.claim_scales) {
                        acc = acc.convolve(&law.map(|x| c * x), self.config.support_cap)?;
                    }
                    Ok(Estimate::exact(acc.moment(m.alpha), Method::Convolution))
                })();
                let (alpha, c, weights) = (m.alpha, m.claim_scales.clone(), s.weights.clone());
                self.exact_or_sample(&m.p, exact, move |g| {
                    let a = g.weighted(&weights);
                    let x: f64 = (0..g.objects())
                        .map(|j| c[j] * g.uninsured_share(&a, &weights, j).max(0.0))
                        .sum();
                    pow0(x, alpha)
                })
            }
        }
    }

    /// Constant of `P(F_{i_1} > u_1 t, ..., F_{i_k} > u_k t) ~ C t^{-alpha}`.
    pub fn joint_tail_constant(
        &self,
        s: &MarketScenario,
        regime: Dependence,
        agents: &[usize],
        thresholds: &[f64],
    ) -> Result<Estimate> {
        let m = Prepared::new(s)?;
        let q = m.p.agents();
        if agents.is_empty() {
            return Err(Error::InvalidArgument("agent set must be non-empty".into()));
        }
        if agents.len() != thresholds.len() {
            return Err(Error::InvalidArgument(
                "one threshold per agent is required".into(),
            ));
        }
        for (n, &i) in agents.iter().enumerate() {
            check_agent(i, q)?;
            if agents[..n].contains(&i) {
                return Err(Error::InvalidArgument(format!("agent {i} listed twice")));
            }
        }
        if thresholds.iter().any(|&u| !(u > 0.0) || !u.is_finite()) {
            return Err(Error::InvalidArgument("thresholds must be positive".into()));
        }
        match regime {
            Dependence::AsymptoticallyIndependent => {
                // The minimum vanishes unless every listed agent insures j.
                let k = agents.len();
                let u_max = thresholds.iter().copied().fold(0.0, f64::max);
                let mut total = NeumaierSum::new();
                let mut method = Method::ClosedForm;
                for j in 0..m.p.objects() {
                    let all: f64 = agents.iter().map(|&i| m.p.get(i, j)).product();
                    if all == 0.0 {
                        continue;
                    }
                    let moment = match s.weights.degree_share() {
                        Some(share) => {
                            method = Method::Convolution;
                            let cond = m.column_law(j).conditional_pmf_excluding_set(agents);
                            compensated_sum(cond.iter().enumerate().map(|(l, &w)| {
                                w * (share.share(k + l) / u_max).powf(m.alpha)
                            }))
                        }
                        None => {
                            let low = agents
                                .iter()
                                .zip(thresholds)
                                .map(|(&i, &u)| s.weights.weight(i, j, 1) / u)
                                .fold(f64::INFINITY, f64::min);
                            pow0(low, m.alpha)
                        }
                    };
                    total.add(m.scales[j] * all * moment);
                }
                Ok(Estimate::exact(total.value(), method))
            }
            Dependence::FullyDependent => {
                if agents.len() == 1 {
                    let e = self.individual_constant_dep(s, agents[0])?;
                    let scale = thresholds[0].powf(-m.alpha);
                    return Ok(Estimate {
                        value: e.value * scale,
                        error_radius: e.error_radius * scale,
                        ..e
                    });
                }
                let (alpha, c, weights) = (m.alpha, m.claim_scales.clone(), s.weights.clone());
                let (agents, thresholds) = (agents.to_vec(), thresholds.to_vec());
                self.enumerate(&m.p, move |g| {
                    let f = g.apply(&g.weighted(&weights), &c);
                    let low = agents
                        .iter()
                        .zip(&thresholds)
                        .map(|(&i, &u)| f[i] / u)
                        .fold(f64::INFINITY, f64::min);
                    pow0(low, alpha)
                })
            }
        }
    }

    pub fn individual_constant(&self, s: &MarketScenario, i: usize, regime: Dependence) -> Result<Estimate> {
        match regime {
            Dependence::AsymptoticallyIndependent => self.individual_constant_ind(s, i),
            Dependence::FullyDependent => self.individual_constant_dep(s, i),
        }
    }

    pub fn systemic_constant(&self, s: &MarketScenario, regime: Dependence) -> Result<Estimate> {
        match regime {
            Dependence::AsymptoticallyIndependent => self.systemic_constant_ind(s),
            Dependence::FullyDependent => self.systemic_constant_dep(s),
        }
    }

    /// All constants of one regime.
    pub fn risk_constants(&self, s: &MarketScenario, regime: Dependence) -> Result<RiskConstants> {
        let q = s.agents();
        let mut per_agent = Vec::with_capacity(q);
        let mut method = Method::ClosedForm;
        let mut radius: f64 = 0.0;
        let mut note = |e: &Estimate| {
            method = method.max(e.method);
            radius = radius.max(e.error_radius);
        };
        for i in 0..q {
            let e = self.individual_constant(s, i, regime)?;
            note(&e);
            per_agent.push(e.value);
        }
        let sys = self.systemic_constant(s, regime)?;
        note(&sys);
        let uninsured = match self.uninsured_constant(s, regime) {
            Ok(e) => {
                note(&e);
                Some(e.value)
            }
            Err(Error::WeightSumViolated { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(RiskConstants {
            per_agent,
            systemic: sys.value,
            uninsured,
            regime,
            method,
            error_radius: radius,
        })
    }

    pub fn spectral_measure_ind(&self, s: &MarketScenario) -> Result<SpectralMeasure> {
        spectral::independent(self, s)
    }

    pub fn spectral_support_dep(&self, s: &MarketScenario) -> Result<SpectralMeasure> {
        spectral::dependent(self, s)
    }
}

/// `C^i_ind` with the default engine.
pub fn individual_constant_ind(s: &MarketScenario, i: usize) -> Result<f64> {
    ExactEngine::default().individual_constant_ind(s, i).map(|e| e.value)
}

/// `C^i_dep` with the default engine.
pub fn individual_constant_dep(s: &MarketScenario, i: usize) -> Result<f64> {
    ExactEngine::default().individual_constant_dep(s, i).map(|e| e.value)
}

pub fn systemic_constant_ind(s: &MarketScenario) -> Result<f64> {
    ExactEngine::default().systemic_constant_ind(s).map(|e| e.value)
}

pub fn systemic_constant_dep(s: &MarketScenario) -> Result<f64> {
    ExactEngine::default().systemic_constant_dep(s).map(|e| e.value)
}

/// `B` for the scenario's own dependence regime.
pub fn uninsured_constant(s: &MarketScenario) -> Result<f64> {
    ExactEngine::default()
        .uninsured_constant(s, s.dependence())
        .map(|e| e.value)
}

/// Joint exceedance constant for the scenario's own dependence regime.
pub fn joint_tail_constant(s: &MarketScenario, agents: &[usize], thresholds: &[f64]) -> Result<f64> {
    ExactEngine::default()
        .joint_tail_constant(s, s.dependence(), agents, thresholds)
        .map(|e| e.value)
}

pub fn spectral_measure_ind(s: &MarketScenario) -> Result<SpectralMeasure> {
    ExactEngine::default().spectral_measure_ind(s)
}

pub fn spectral_support_dep(s: &MarketScenario) -> Result<SpectralMeasure> {
    ExactEngine::default().spectral_support_dep(s)
}
