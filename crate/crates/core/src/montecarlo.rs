//! Monte Carlo simulation of exposures `F = A V`.
//!
//! Replicates are grouped into blocks of [`BLOCK`]; block `b` draws from a
//! ChaCha stream keyed by `(seed, b)`. Blocks are reduced in index order with
//! integer counts or ordered concatenation, so results are bit-identical for
//! any number of worker threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Discrete, Poisson};

use crate::error::{Error, Result};
use crate::exact::SpectralMeasure;
use crate::graph::Realization;
use crate::model::{AggregationNorm, Dependence, MarketScenario, ProbMatrix, WeightScheme};
use crate::stats::{normal_quantile, proportion_half_width, zero_count_upper_bound};

pub const BLOCK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub replicates: u64,
    pub seed: u64,
    /// Strictly increasing. Empty means [`default_thresholds`].
    pub thresholds: Vec<f64>,
    pub confidence: f64,
}

impl SimConfig {
    pub fn new(replicates: u64, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            thresholds: Vec::new(),
            confidence: 0.99,
        }
    }

    pub fn with_thresholds(mut self, thresholds: Vec<f64>) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    fn resolved_thresholds(&self, s: &MarketScenario) -> Vec<f64> {
        if self.thresholds.is_empty() {
            default_thresholds(s)
        } else {
            self.thresholds.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be >= 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidArgument("confidence must lie in (0, 1)".into()));
        }
        if self.thresholds.iter().any(|t| !(*t > 0.0) || !t.is_finite())
            || self.thresholds.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidArgument(
                "thresholds must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Five geometric points over `[10, 1000] * max_j K_j^{1/alpha}`.
pub fn default_thresholds(s: &MarketScenario) -> Vec<f64> {
    let base = exactness_floor(s);
    (0..5).map(|k| base * 10f64.powf(1.0 + 0.5 * k as f64)).collect()
}

/// Below `max_j K_j^{1/alpha}` the sampled law is not exactly Pareto.
pub fn exactness_floor(s: &MarketScenario) -> f64 {
    s.claims
        .claim_scales()
        .into_iter()
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Agent(usize),
    Aggregate(AggregationNorm),
    Uninsured,
}

impl Target {
    pub fn label(&self) -> String {
        match self {
            Target::Agent(i) => format!("agent_{i}"),
            Target::Aggregate(n) => format!("aggregate_{}", n.label()),
            Target::Uninsured => "uninsured".into(),
        }
    }
}

/// One replicate: graph, claims and exposures.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub graph: Realization,
    pub claims: Vec<f64>,
    pub exposures: Vec<f64>,
}

struct Sampler {
    p: ProbMatrix,
    weights: WeightScheme,
    scales: Vec<f64>,
    dependence: Dependence,
    pareto: Pareto<f64>,
}

impl Sampler {
    fn new(s: &MarketScenario) -> Result<Self> {
        let p = s.checked_probabilities()?;
        let pareto = Pareto::new(1.0, s.claims.alpha)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(Self {
            p,
            weights: s.weights.clone(),
            scales: s.claims.claim_scales(),
            dependence: s.claims.dependence,
            pareto,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Sample {
        let graph = Realization::sample(&self.p, rng);
        let claims: Vec<f64> = match self.dependence {
            Dependence::AsymptoticallyIndependent => self
                .scales
                .iter()
                .map(|c| c * self.pareto.sample(rng))
                .collect(),
            Dependence::FullyDependent => {
                let z = self.pareto.sample(rng);
                self.scales.iter().map(|c| c * z).collect()
            }
        };
        let a = graph.weighted(&self.weights);
        let exposures = graph.apply(&a, &claims);
        Sample {
            graph,
            claims,
            exposures,
        }
    }

    fn target_value(&self, target: Target, x: &Sample) -> f64 {
        match target {
            Target::Agent(i) => x.exposures[i],
            Target::Aggregate(norm) => norm.norm(&x.exposures),
            Target::Uninsured => {
                let a = x.graph.weighted(&self.weights);
                (0..x.graph.objects())
                    .map(|j| x.graph.uninsured_share(&a, &self.weights, j).max(0.0) * x.claims[j])
                    .sum()
            }
        }
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn block_len(replicates: u64, block: u64) -> u64 {
    BLOCK.min(replicates - block * BLOCK)
}

/// Maps every block to a value in parallel; results are in block order.
fn map_blocks<T, F>(replicates: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    (0..replicates.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| f(&mut block_rng(seed, b), block_len(replicates, b)))
        .collect()
}

fn check_target(target: Target, s: &MarketScenario) -> Result<()> {
    match target {
        Target::Agent(i) if i >= s.agents() => Err(Error::IndexOutOfRange {
            kind: "agent",
            index: i,
            len: s.agents(),
        }),
        Target::Aggregate(n) if !(n.r > 0.0) => {
            Err(Error::InvalidArgument("norm parameter must be positive".into()))
        }
        _ => Ok(()),
    }
}

/// Replicates in index order. Sequential; for large runs prefer the
/// aggregate estimators, which parallelize over blocks.
pub fn sample_exposures(s: &MarketScenario, cfg: &SimConfig) -> Result<impl Iterator<Item = Sample>> {
    cfg.validate()?;
    let sampler = Sampler::new(s)?;
    let (n, seed) = (cfg.replicates, cfg.seed);
    Ok((0..n.div_ceil(BLOCK)).flat_map(move |b| {
        let mut rng = block_rng(seed, b);
        let len = block_len(n, b);
        let draws: Vec<Sample> = (0..len).map(|_| sampler.draw(&mut rng)).collect();
        draws
    }))
}

/// Values of `target` for every replicate, in replicate order.
pub fn sample_target(target: Target, s: &MarketScenario, cfg: &SimConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_target(target, s)?;
    let sampler = Sampler::new(s)?;
    let parts = map_blocks(cfg.replicates, cfg.seed, |rng, len| {
        (0..len)
            .map(|_| sampler.target_value(target, &sampler.draw(rng)))
            .collect::<Vec<f64>>()
    });
    Ok(parts.concat())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub threshold: f64,
    /// `t^alpha * #{X > t} / N`.
    pub point: f64,
    pub half_width: f64,
    pub n_exceed: u64,
    /// Zero exceedances: `half_width` is a one-sided upper bound.
    pub one_sided: bool,
    /// Threshold lies where the simulated claim law is exactly Pareto.
    pub authoritative: bool,
}

impl TailEstimate {
    pub fn contains(&self, value: f64) -> bool {
        if self.one_sided {
            value >= 0.0 && value <= self.half_width
        } else {
            (value - self.point).abs() <= self.half_width
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub target: Target,
    pub replicates: u64,
    pub estimates: Vec<TailEstimate>,
    /// The two largest thresholds agree within their combined half-widths.
    pub plateau_converged: bool,
}

impl TailReport {
    /// Estimate at the largest threshold.
    pub fn plateau(&self) -> &TailEstimate {
        self.estimates.last().expect("at least one threshold")
    }
}

fn tail_estimate(t: f64, k: u64, n: u64, alpha: f64, confidence: f64, floor: f64) -> TailEstimate {
    let scale = t.powf(alpha);
    let (point, half_width, one_sided) = if k == 0 {
        (0.0, scale * zero_count_upper_bound(n, 1.0 - (1.0 - confidence) / 2.0), true)
    } else {
        // Continuity guard of half a count.
        let hw = proportion_half_width(k, n, confidence) + 0.5 / n as f64;
        (scale * k as f64 / n as f64, scale * hw, false)
    };
    TailEstimate {
        threshold: t,
        point,
        half_width,
        n_exceed: k,
        one_sided,
        authoritative: t >= floor,
    }
}

/// Empirical `t^alpha P(X > t)` at each threshold.
pub fn empirical_tail_constant(target: Target, s: &MarketScenario, cfg: &SimConfig) -> Result<TailReport> {
    cfg.validate()?;
    check_target(target, s)?;
    let sampler = Sampler::new(s)?;
    let thresholds = cfg.resolved_thresholds(s);
    let m = thresholds.len();
    let parts = map_blocks(cfg.replicates, cfg.seed, |rng, len| {
        let mut counts = vec![0u64; m];
        for _ in 0..len {
            let x = sampler.target_value(target, &sampler.draw(rng));
            for (c, &t) in counts.iter_mut().zip(&thresholds) {
                *c += u64::from(x > t);
            }
        }
        counts
    });
    let mut counts = vec![0u64; m];
    for part in parts {
        for (c, k) in counts.iter_mut().zip(part) {
            *c += k;
        }
    }
    let floor = exactness_floor(s);
    let estimates: Vec<TailEstimate> = thresholds
        .iter()
        .zip(&counts)
        .map(|(&t, &k)| tail_estimate(t, k, cfg.replicates, s.alpha(), cfg.confidence, floor))
        .collect();
    let plateau_converged = match estimates.as_slice() {
        [.., a, b] => (a.point - b.point).abs() <= a.half_width + b.half_width,
        _ => true,
    };
    Ok(TailReport {
        target,
        replicates: cfg.replicates,
        estimates,
        plateau_converged,
    })
}

fn check_gamma(gamma: f64, n: u64, min_tail: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    let available = n as f64 * gamma;
    if available < min_tail {
        return Err(Error::InsufficientTailMass {
            available,
            required: min_tail,
        });
    }
    Ok(())
}

/// `VaR_{1-gamma}` as the order statistic of rank `ceil(N (1 - gamma))`.
fn order_statistic(values: &mut [f64], gamma: f64) -> f64 {
    let n = values.len();
    let rank = ((n as f64 * (1.0 - gamma)).ceil() as usize).clamp(1, n);
    let (_, x, _) = values.select_nth_unstable_by(rank - 1, f64::total_cmp);
    *x
}

/// Empirical VaR and CoTE from one set of samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRisk {
    pub var: f64,
    /// `None` for `alpha <= 1` or too few tail samples.
    pub cote: Option<f64>,
    pub n_tail: u64,
}

fn risk_from_samples(mut values: Vec<f64>, gamma: f64) -> (f64, f64, u64) {
    let var = order_statistic(&mut values, gamma);
    let tail: Vec<f64> = values.into_iter().filter(|&x| x > var).collect();
    let n_tail = tail.len() as u64;
    let cote = if tail.is_empty() {
        var
    } else {
        crate::numeric::compensated_sum(tail.iter().copied()) / tail.len() as f64
    };
    (var, cote, n_tail)
}

pub fn empirical_var(target: Target, s: &MarketScenario, cfg: &SimConfig, gamma: f64) -> Result<f64> {
    check_gamma(gamma, cfg.replicates, 20.0)?;
    let mut values = sample_target(target, s, cfg)?;
    Ok(order_statistic(&mut values, gamma))
}

pub fn empirical_cote(target: Target, s: &MarketScenario, cfg: &SimConfig, gamma: f64) -> Result<f64> {
    if !(s.alpha() > 1.0) {
        return Err(Error::InfiniteMean { alpha: s.alpha() });
    }
    check_gamma(gamma, cfg.replicates, 50.0)?;
    let values = sample_target(target, s, cfg)?;
    Ok(risk_from_samples(values, gamma).1)
}

/// VaR and (when defined) CoTE from a single simulation run.
pub fn empirical_risk(target: Target, s: &MarketScenario, cfg: &SimConfig, gamma: f64) -> Result<EmpiricalRisk> {
    check_gamma(gamma, cfg.replicates, 20.0)?;
    let values = sample_target(target, s, cfg)?;
    let cote_ok = s.alpha() > 1.0 && cfg.replicates as f64 * gamma >= 50.0;
    let (var, cote, n_tail) = risk_from_samples(values, gamma);
    Ok(EmpiricalRisk {
        var,
        cote: cote_ok.then_some(cote),
        n_tail,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UninsuredCount {
    /// Empirical `P(W = k)` for `k = 0..=d`.
    pub pmf: Vec<f64>,
    pub lambda: f64,
    /// Total-variation distance between the empirical law and `Pois(lambda)`.
    pub tv_distance: f64,
    pub tv_bound: f64,
    /// One-sigma sampling radius of the empirical total-variation distance.
    pub noise_radius: f64,
}

/// Empirical law of the number of uninsured objects.
pub fn count_uninsured(s: &MarketScenario, cfg: &SimConfig) -> Result<UninsuredCount> {
    cfg.validate()?;
    let p = s.checked_probabilities()?;
    let d = p.objects();
    let parts = map_blocks(cfg.replicates, cfg.seed, |rng, len| {
        let mut counts = vec![0u64; d + 1];
        for _ in 0..len {
            counts[Realization::sample(&p, rng).uninsured_count()] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; d + 1];
    for part in parts {
        for (c, k) in counts.iter_mut().zip(part) {
            *c += k;
        }
    }
    let n = cfg.replicates as f64;
    let pmf: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let approx = crate::poisson::noninsured_count_approx(s)?;
    let lambda = approx.lambda;
    let pois = |k: usize| {
        if lambda == 0.0 {
            f64::from(u8::from(k == 0))
        } else {
            Poisson::new(lambda).expect("positive mean").pmf(k as u64)
        }
    };
    let mut diff = 0.0;
    let mut covered = 0.0;
    for (k, &e) in pmf.iter().enumerate() {
        let pk = pois(k);
        covered += pk;
        diff += (e - pk).abs();
    }
    diff += (1.0 - covered).max(0.0);
    let noise = pmf.iter().map(|&e| (e * (1.0 - e) / n).sqrt()).sum::<f64>() / 2.0;
    Ok(UninsuredCount {
        pmf,
        lambda,
        tv_distance: diff / 2.0,
        tv_bound: approx.tv_bound,
        noise_radius: noise,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularHistogram {
    pub threshold: f64,
    /// Exceedances assigned to each atom of the reference measure.
    pub counts: Vec<u64>,
    pub n_exceed: u64,
    /// Mean distance from a sampled direction to its assigned atom.
    pub mean_distance: f64,
}

impl AngularHistogram {
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n_exceed.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Directions `F / ||F||` of replicates with `||F|| > t`, each assigned to
/// the nearest atom of `reference` (Euclidean distance).
pub fn angular_histogram(
    s: &MarketScenario,
    cfg: &SimConfig,
    reference: &SpectralMeasure,
    threshold: f64,
) -> Result<AngularHistogram> {
    cfg.validate()?;
    if reference.is_empty() {
        return Err(Error::InvalidArgument("reference measure has no atoms".into()));
    }
    let sampler = Sampler::new(s)?;
    let norm = reference.norm;
    let m = reference.len();
    let nearest = |dir: &[f64]| {
        reference
            .atoms
            .iter()
            .map(|a| {
                a.point
                    .iter()
                    .zip(dir)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
            })
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty")
    };
    let parts = map_blocks(cfg.replicates, cfg.seed, |rng, len| {
        let mut counts = vec![0u64; m];
        let mut dist = crate::numeric::NeumaierSum::new();
        for _ in 0..len {
            let x = sampler.draw(rng);
            let r = norm.norm(&x.exposures);
            if r > threshold {
                let dir: Vec<f64> = x.exposures.iter().map(|f| f / r).collect();
                let (k, d2) = nearest(&dir);
                counts[k] += 1;
                dist.add(d2.sqrt());
            }
        }
        (counts, dist.value())
    });
    let mut counts = vec![0u64; m];
    let mut dist = crate::numeric::NeumaierSum::new();
    for (part, dsum) in parts {
        for (c, k) in counts.iter_mut().zip(part) {
            *c += k;
        }
        dist.add(dsum);
    }
    let n_exceed: u64 = counts.iter().sum();
    Ok(AngularHistogram {
        threshold,
        counts,
        n_exceed,
        mean_distance: dist.value() / n_exceed.max(1) as f64,
    })
}

/// Two-sided normal quantile for `confidence`, exposed for reporting.
pub fn z_value(confidence: f64) -> f64 {
    normal_quantile(0.5 + confidence / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClaimSpec, EdgeModel};

    fn homogeneous(q: usize, d: usize, p: f64, alpha: f64, dep: Dependence) -> MarketScenario {
        MarketScenario::new(
            EdgeModel::Homogeneous { q, d, p },
            ClaimSpec::unit(alpha, d, dep),
        )
    }

    #[test]
    fn default_thresholds_span_two_decades() {
        let mut s = homogeneous(2, 2, 0.5, 2.0, Dependence::AsymptoticallyIndependent);
        s.claims.scales = vec![4.0, 1.0];
        let t = default_thresholds(&s);
        assert_eq!(t.len(), 5);
        assert!((t[0] - 20.0).abs() < 1e-12 && (t[4] - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn zero_edges_give_zero_exposure() {
        let s = homogeneous(3, 2, 0.0, 1.5, Dependence::AsymptoticallyIndependent);
        for x in sample_exposures(&s, &SimConfig::new(100, 1)).unwrap() {
            assert!(x.exposures.iter().all(|&f| f == 0.0));
        }
        let var = empirical_var(Target::Agent(0), &s, &SimConfig::new(1000, 1), 0.05).unwrap();
        assert_eq!(var, 0.0);
    }

    #[test]
    fn proportional_columns_are_zero_or_one() {
        let s = homogeneous(4, 3, 0.4, 1.5, Dependence::FullyDependent);
        for x in sample_exposures(&s, &SimConfig::new(500, 3)).unwrap() {
            let a = x.graph.weighted(&WeightScheme::Proportional);
            for j in 0..3 {
                let col: f64 = (0..4).map(|i| a[i * 3 + j]).sum();
                assert!(col == 0.0 || (col - 1.0).abs() < 1e-15);
            }
            let z = x.claims[0];
            assert!(x.claims.iter().all(|&v| v == z));
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let s = homogeneous(3, 3, 0.5, 1.5, Dependence::AsymptoticallyIndependent);
        let cfg = SimConfig::new(3 * BLOCK + 17, 42);
        let target = Target::Aggregate(AggregationNorm::ONE);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    (
                        empirical_tail_constant(target, &s, &cfg).unwrap(),
                        sample_target(target, &s, &cfg).unwrap(),
                    )
                })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn single_pareto_tail_is_unbiased() {
        let s = MarketScenario::new(
            EdgeModel::Deterministic { adjacency: vec![vec![1]] },
            ClaimSpec::new(2.0, vec![1.0], Dependence::AsymptoticallyIndependent),
        );
        let cfg = SimConfig::new(200_000, 9).with_thresholds(vec![1.0, 3.0, 10.0]);
        let r = empirical_tail_constant(Target::Agent(0), &s, &cfg).unwrap();
        assert_eq!(r.estimates[0].point, 1.0);
        for e in &r.estimates {
            assert!(e.contains(1.0), "{e:?}");
        }
    }

    #[test]
    fn pareto_quantile_recovered() {
        let s = MarketScenario::new(
            EdgeModel::Deterministic { adjacency: vec![vec![1]] },
            ClaimSpec::new(2.0, vec![1.0], Dependence::AsymptoticallyIndependent),
        );
        let gamma = 0.01;
        let var = empirical_var(Target::Agent(0), &s, &SimConfig::new(400_000, 5), gamma).unwrap();
        assert!((var / gamma.powf(-0.5) - 1.0).abs() < 0.03, "{var}");
    }

    #[test]
    fn guards() {
        let s = homogeneous(2, 2, 0.5, 1.0, Dependence::AsymptoticallyIndependent);
        let cfg = SimConfig::new(1000, 1);
        assert!(matches!(
            empirical_var(Target::Agent(0), &s, &cfg, 0.01),
            Err(Error::InsufficientTailMass { .. })
        ));
        assert!(matches!(
            empirical_cote(Target::Agent(0), &s, &cfg, 0.1),
            Err(Error::InfiniteMean { .. })
        ));
        assert!(empirical_tail_constant(Target::Agent(7), &s, &cfg).is_err());
        let bad = cfg.clone().with_thresholds(vec![5.0, 2.0]);
        assert!(empirical_tail_constant(Target::Uninsured, &s, &bad).is_err());
    }

    #[test]
    fn zero_exceedances_are_one_sided() {
        let s = homogeneous(2, 2, 1.0, 1.5, Dependence::AsymptoticallyIndependent);
        let r = empirical_tail_constant(Target::Uninsured, &s, &SimConfig::new(1000, 2)).unwrap();
        for e in &r.estimates {
            assert_eq!(e.point, 0.0);
            assert!(e.one_sided && e.half_width > 0.0);
        }
    }

    #[test]
    fn full_coverage_count_is_point_mass() {
        let s = homogeneous(3, 4, 1.0, 1.5, Dependence::AsymptoticallyIndependent);
        let c = count_uninsured(&s, &SimConfig::new(500, 1)).unwrap();
        assert_eq!(c.pmf[0], 1.0);
        assert_eq!(c.tv_distance, 0.0);
    }
}
