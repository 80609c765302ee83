//! Asymptotic extreme-risk analysis of random bipartite insurance markets.
//!
//! Agents insure objects through a random bipartite graph; object claims
//! are Pareto-tailed. The crate computes the tail constants of agent and
//! systemic exposures exactly, converts them into VaR/CoTE asymptotics,
//! approximates large markets by Poisson limits, and checks everything by
//! simulation.

pub mod error;
pub mod exact;
pub mod graph;
pub mod model;
pub mod montecarlo;
pub mod numeric;
pub mod poisson;
pub mod risk;
pub mod sweep;
mod stats;

pub use error::{Error, Result};
pub use exact::{
    DegreeLaw, EngineConfig, Estimate, ExactEngine, McFallback, Method, RiskConstants,
    SpectralAtom, SpectralMeasure,
};
pub use graph::Realization;
pub use montecarlo::{SimConfig, Target, TailEstimate, TailReport};
pub use model::{
    materialize_probabilities, AggregationNorm, ClaimSpec, Dependence, EdgeModel,
    MarketScenario, ProbMatrix, Violation, WeightScheme,
};
pub use poisson::{PoissonApprox, Shift};
pub use risk::{OrderingReport, RiskMeasure, RiskMeasureCurve};
pub use sweep::{Figure, Output, Row, SweepParameter, SweepSpec};
