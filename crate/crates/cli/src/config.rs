//! JSON run configuration.
//!
//! Numbers where exactness matters may be written as decimal strings
//! (`"0.05"`); they are parsed to binary floating point once, here.

use std::path::Path;

use netrisk::sweep::{Output, SweepParameter, SweepSpec};
use netrisk::MarketScenario;
use serde::{Deserialize, Deserializer};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// A real number given either as a JSON number or as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decimal(pub f64);

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Decimal(x)),
            Raw::Str(s) => match s.trim() {
                "inf" | "infinity" | "Infinity" => Ok(Decimal(f64::INFINITY)),
                t => t
                    .parse()
                    .map(Decimal)
                    .map_err(|_| serde::de::Error::custom(format!("not a decimal number: {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<Decimal>),
    Range { start: Decimal, stop: Decimal, step: Decimal },
}

impl Grid {
    /// Range grids are computed as `start + k (stop - start) / n` so the
    /// endpoint is hit exactly.
    pub fn values(&self) -> CliResult<Vec<f64>> {
        match self {
            Grid::Points(v) => Ok(v.iter().map(|d| d.0).collect()),
            Grid::Range { start, stop, step } => {
                let (a, b, h) = (start.0, stop.0, step.0);
                if !(h > 0.0) || !(b > a) {
                    return Err(CliError::invalid("invalid_config", "grid range needs stop > start and step > 0"));
                }
                let n = ((b - a) / h).round();
                if n < 1.0 || ((n * h) - (b - a)).abs() > 1e-9 * (b - a) {
                    return Err(CliError::invalid("invalid_config", "grid step must divide stop - start"));
                }
                let n = n as usize;
                Ok((0..=n).map(|k| if k == n { b } else { a + k as f64 * (b - a) / n as f64 }).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub grid: Grid,
    pub outputs: Vec<Output>,
}

impl SweepConfig {
    pub fn spec(&self) -> CliResult<SweepSpec> {
        Ok(SweepSpec {
            parameter: self.parameter,
            grid: self.grid.values()?,
            outputs: self.outputs.clone(),
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub replicates: Option<u64>,
    pub seed: Option<u64>,
    pub thresholds: Option<Vec<Decimal>>,
    pub confidence: Option<Decimal>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointConfig {
    /// One-based agent labels.
    pub agents: Vec<usize>,
    pub thresholds: Vec<Decimal>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiguresConfig {
    pub step: Option<Decimal>,
    /// Subset of figure numbers; all when absent.
    pub only: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub scenario: Option<MarketScenario>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub mc: McConfig,
    /// Levels `gamma` for asymptotic VaR and CoTE.
    #[serde(default)]
    pub risk_levels: Vec<Decimal>,
    pub joint: Option<JointConfig>,
    #[serde(default)]
    pub figures: FiguresConfig,
    pub tol: Option<Decimal>,
    /// Let exact routes that exceed their caps fall back to sampling.
    #[serde(default)]
    pub allow_mc_fallback: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: None,
            sweep: None,
            mc: McConfig::default(),
            risk_levels: Vec::new(),
            joint: None,
            figures: FiguresConfig::default(),
            tol: None,
            allow_mc_fallback: false,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::invalid("invalid_config", e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::invalid(
                "unsupported_schema",
                format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid("invalid_config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The scenario, validated.
    pub fn scenario(&self) -> CliResult<&MarketScenario> {
        let s = self
            .scenario
            .as_ref()
            .ok_or_else(|| CliError::invalid("invalid_config", "this subcommand needs a \"scenario\""))?;
        s.validate().map_err(netrisk::Error::InvalidScenario)?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_accept_strings_and_numbers() {
        let v: Vec<Decimal> = serde_json::from_str(r#"[0.1, "0.1", "inf"]"#).unwrap();
        assert_eq!(v[0], v[1]);
        assert!(v[2].0.is_infinite());
        assert!(serde_json::from_str::<Decimal>(r#""abc""#).is_err());
    }

    #[test]
    fn range_grid_hits_the_endpoint() {
        let g: Grid = serde_json::from_str(r#"{"start": "0", "stop": "1", "step": "0.05"}"#).unwrap();
        let v = g.values().unwrap();
        assert_eq!(v.len(), 21);
        assert_eq!(v[20], 1.0);
        assert_eq!(v[1], 0.05);
        let bad: Grid = serde_json::from_str(r#"{"start": 0, "stop": 1, "step": 0.3}"#).unwrap();
        assert!(bad.values().is_err());
    }

    #[test]
    fn schema_version_is_checked() {
        assert!(Config::parse(r#"{"schema_version": 1}"#).is_ok());
        let e = Config::parse(r#"{"schema_version": 2}"#).unwrap_err();
        assert_eq!(e.kind, "unsupported_schema");
        assert!(Config::parse(r#"{"schema_version": 1, "bogus": 0}"#).is_err());
    }
}
