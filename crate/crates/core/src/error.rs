use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {}", format_violations(.0))]
    InvalidScenario(Vec<Violation>),

    #[error("{kind} index {index} out of range (size {len})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        len: usize,
    },

    #[error("{what}: size {size} exceeds cap {cap}; enable the Monte Carlo fallback or shrink the market")]
    CapExceeded {
        what: &'static str,
        size: u64,
        cap: u64,
    },

    #[error("object {object}: insured weight reaches {sum}, uninsured share would be negative")]
    WeightSumViolated { object: usize, sum: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("alpha = {alpha} <= 1: tail has infinite mean, CoTE undefined")]
    InfiniteMean { alpha: f64 },

    #[error("insufficient tail mass: N*gamma = {available}, need at least {required}")]
    InsufficientTailMass { available: f64, required: f64 },

    #[error("series did not reach tolerance {tol} within {terms} terms")]
    NonConvergent { tol: f64, terms: usize },

    #[error("all individual constants vanish; diversification benefit undefined")]
    Degenerate,
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
