//! Market scenarios: edge-probability families, claim parameters, weight
//! schemes and aggregation norms. Every downstream computation consumes only
//! the types defined here.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on column sums of explicit weights.
const WEIGHT_SUM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependence {
    #[serde(alias = "independent", alias = "ind")]
    AsymptoticallyIndependent,
    #[serde(alias = "dependent", alias = "dep")]
    FullyDependent,
}

impl Dependence {
    pub fn label(self) -> &'static str {
        match self {
            Dependence::AsymptoticallyIndependent => "ind",
            Dependence::FullyDependent => "dep",
        }
    }
}

impl fmt::Display for Dependence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Pareto claim parameters: `P(V_j > t) ~ K_j t^{-alpha}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimSpec {
    #[serde(deserialize_with = "flex::f64")]
    pub alpha: f64,
    #[serde(deserialize_with = "flex::vec_f64")]
    pub scales: Vec<f64>,
    pub dependence: Dependence,
}

impl ClaimSpec {
    pub fn new(alpha: f64, scales: Vec<f64>, dependence: Dependence) -> Self {
        Self {
            alpha,
            scales,
            dependence,
        }
    }

    /// Unit scales `K_j = 1` for `d` objects.
    pub fn unit(alpha: f64, d: usize, dependence: Dependence) -> Self {
        Self::new(alpha, vec![1.0; d], dependence)
    }

    /// `K_j^{1/alpha}`, the scale of the claim variable itself.
    pub fn claim_scales(&self) -> Vec<f64> {
        self.scales.iter().map(|k| k.powf(1.0 / self.alpha)).collect()
    }

    pub fn total_scale(&self) -> f64 {
        crate::numeric::compensated_sum(self.scales.iter().copied())
    }

    /// `(sum_j K_j^{1/alpha})^alpha`, the tail constant of the total claim
    /// under full dependence.
    pub fn total_scale_dependent(&self) -> f64 {
        crate::numeric::compensated_sum(self.claim_scales()).powf(self.alpha)
    }
}

/// Dense row-major `q x d` matrix of edge probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    q: usize,
    d: usize,
    data: Vec<f64>,
}

impl ProbMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let q = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        if q == 0 || d == 0 {
            return Err(Error::InvalidArgument("empty probability matrix".into()));
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("ragged probability matrix".into()));
        }
        Ok(Self {
            q,
            d,
            data: rows.concat(),
        })
    }

    pub fn filled(q: usize, d: usize, p: f64) -> Self {
        Self {
            q,
            d,
            data: vec![p; q * d],
        }
    }

    pub fn agents(&self) -> usize {
        self.q
    }

    pub fn objects(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.q).map(|i| self.get(i, j)).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.q).map(|i| self.row(i).to_vec()).collect()
    }

    /// `P(deg(j) = 0) = prod_i (1 - p_ij)`.
    pub fn uninsured_prob(&self, j: usize) -> f64 {
        (0..self.q).map(|i| 1.0 - self.get(i, j)).product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeModel {
    /// Arbitrary `q x d` probability matrix.
    Explicit {
        #[serde(deserialize_with = "flex::mat_f64")]
        p: Vec<Vec<f64>>,
    },
    /// Fixed graph given by a 0/1 adjacency matrix.
    Deterministic { adjacency: Vec<Vec<u8>> },
    /// Three agents, three objects, cyclic `1, b, b^2` rows.
    Toy {
        #[serde(deserialize_with = "flex::f64")]
        b: f64,
    },
    Homogeneous {
        q: usize,
        d: usize,
        #[serde(deserialize_with = "flex::f64")]
        p: f64,
    },
    /// Product form `p_ij = beta_i * delta_j`.
    Rasch {
        #[serde(deserialize_with = "flex::vec_f64")]
        beta: Vec<f64>,
        #[serde(deserialize_with = "flex::vec_f64")]
        delta: Vec<f64>,
    },
}

impl EdgeModel {
    pub fn agents(&self) -> usize {
        match self {
            EdgeModel::Explicit { p } => p.len(),
            EdgeModel::Deterministic { adjacency } => adjacency.len(),
            EdgeModel::Toy { .. } => 3,
            EdgeModel::Homogeneous { q, .. } => *q,
            EdgeModel::Rasch { beta, .. } => beta.len(),
        }
    }

    pub fn objects(&self) -> usize {
        match self {
            EdgeModel::Explicit { p } => p.first().map_or(0, Vec::len),
            EdgeModel::Deterministic { adjacency } => adjacency.first().map_or(0, Vec::len),
            EdgeModel::Toy { .. } => 3,
            EdgeModel::Homogeneous { d, .. } => *d,
            EdgeModel::Rasch { delta, .. } => delta.len(),
        }
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        match self {
            EdgeModel::Explicit { p } => {
                if p.is_empty() || p[0].is_empty() {
                    out.push(Violation::new("edges.p", "probability matrix is empty"));
                } else if p.iter().any(|r| r.len() != p[0].len()) {
                    out.push(Violation::new("edges.p", "rows have different lengths"));
                }
                for (i, row) in p.iter().enumerate() {
                    for (j, &x) in row.iter().enumerate() {
                        if !in_unit(x) {
                            out.push(Violation::new(
                                format!("edges.p[{i}][{j}]"),
                                format!("probability {x} outside [0,1]"),
                            ));
                        }
                    }
                }
            }
            EdgeModel::Deterministic { adjacency } => {
                if adjacency.is_empty() || adjacency[0].is_empty() {
                    out.push(Violation::new("edges.adjacency", "adjacency matrix is empty"));
                } else if adjacency.iter().any(|r| r.len() != adjacency[0].len()) {
                    out.push(Violation::new("edges.adjacency", "rows have different lengths"));
                }
                for (i, row) in adjacency.iter().enumerate() {
                    for (j, &x) in row.iter().enumerate() {
                        if x > 1 {
                            out.push(Violation::new(
                                format!("edges.adjacency[{i}][{j}]"),
                                format!("entry {x} is not 0/1"),
                            ));
                        }
                    }
                }
            }
            EdgeModel::Toy { b } => {
                if !in_unit(*b) {
                    out.push(Violation::new("edges.b", format!("b = {b} outside [0,1]")));
                }
            }
            EdgeModel::Homogeneous { q, d, p } => {
                if *q == 0 || *d == 0 {
                    out.push(Violation::new("edges", "q and d must be at least 1"));
                }
                if !in_unit(*p) {
                    out.push(Violation::new("edges.p", format!("p = {p} outside [0,1]")));
                }
            }
            EdgeModel::Rasch { beta, delta } => {
                if beta.is_empty() || delta.is_empty() {
                    out.push(Violation::new("edges", "beta and delta must be non-empty"));
                }
                for (i, &b) in beta.iter().enumerate() {
                    if !(b >= 0.0 && b.is_finite()) {
                        out.push(Violation::new(
                            format!("edges.beta[{i}]"),
                            format!("beta = {b} must be finite and nonnegative"),
                        ));
                    }
                }
                for (j, &d) in delta.iter().enumerate() {
                    if !(d >= 0.0 && d.is_finite()) {
                        out.push(Violation::new(
                            format!("edges.delta[{j}]"),
                            format!("delta = {d} must be finite and nonnegative"),
                        ));
                    }
                }
                for (i, &b) in beta.iter().enumerate() {
                    for (j, &d) in delta.iter().enumerate() {
                        if b * d > 1.0 {
                            out.push(Violation::new(
                                format!("edges.rasch[{i}][{j}]"),
                                format!("beta_{i} * delta_{j} = {} exceeds 1", b * d),
                            ));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Full `p_ij` matrix of an edge model.
pub fn materialize_probabilities(model: &EdgeModel) -> Result<ProbMatrix> {
    let v = model.violations();
    if !v.is_empty() {
        return Err(Error::InvalidScenario(v));
    }
    match model {
        EdgeModel::Explicit { p } => ProbMatrix::from_rows(p),
        EdgeModel::Deterministic { adjacency } => {
            let rows: Vec<Vec<f64>> = adjacency
                .iter()
                .map(|r| r.iter().map(|&x| f64::from(x)).collect())
                .collect();
            ProbMatrix::from_rows(&rows)
        }
        EdgeModel::Toy { b } => {
            let (b, b2) = (*b, b * b);
            ProbMatrix::from_rows(&[
                vec![1.0, b, b2],
                vec![b2, 1.0, b],
                vec![b, b2, 1.0],
            ])
        }
        EdgeModel::Homogeneous { q, d, p } => Ok(ProbMatrix::filled(*q, *d, *p)),
        EdgeModel::Rasch { beta, delta } => {
            let rows: Vec<Vec<f64>> = beta
                .iter()
                .map(|b| delta.iter().map(|d| b * d).collect())
                .collect();
            ProbMatrix::from_rows(&rows)
        }
    }
}

/// How a claim on object `j` is split among the agents insuring it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightScheme {
    /// `W_ij = 1 / deg(j)`, with `0/0 := 0`.
    Proportional,
    /// `W_ij = deg(j)^{1 - 1/r}`.
    Compensated {
        #[serde(deserialize_with = "flex::f64", serialize_with = "flex::ser_f64")]
        r: f64,
    },
    /// Fixed weights composed with the edge indicator.
    #[serde(alias = "explicit")]
    ExplicitWeights {
        #[serde(deserialize_with = "flex::mat_f64")]
        w: Vec<Vec<f64>>,
    },
}

impl WeightScheme {
    /// Weight of an existing edge `(i, j)` when the object has degree `deg >= 1`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize, deg: usize) -> f64 {
        match self {
            WeightScheme::Proportional => 1.0 / deg as f64,
            WeightScheme::Compensated { r } => compensated_weight(*r, deg),
            WeightScheme::ExplicitWeights { w } => w[i][j],
        }
    }

    /// The weight depends on the realized graph only through `deg(j)`.
    pub fn degree_share(&self) -> Option<DegreeShare> {
        match self {
            WeightScheme::Proportional => Some(DegreeShare::Proportional),
            WeightScheme::Compensated { r } => Some(DegreeShare::Compensated(*r)),
            WeightScheme::ExplicitWeights { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            WeightScheme::Proportional => "proportional".into(),
            WeightScheme::Compensated { r } => format!("compensated(r={})", fmt_ext(*r)),
            WeightScheme::ExplicitWeights { .. } => "explicit".into(),
        }
    }
}

/// Degree-coupled weight families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreeShare {
    Proportional,
    Compensated(f64),
}

impl DegreeShare {
    /// Share carried by each of the `deg >= 1` insurers.
    #[inline]
    pub fn share(self, deg: usize) -> f64 {
        match self {
            DegreeShare::Proportional => 1.0 / deg as f64,
            DegreeShare::Compensated(r) => compensated_weight(r, deg),
        }
    }
}

#[inline]
fn compensated_weight(r: f64, deg: usize) -> f64 {
    let k = deg as f64;
    if r.is_infinite() {
        k
    } else {
        k.powf(1.0 - 1.0 / r)
    }
}

/// `r`-norm (or quasinorm for `r < 1`) used to aggregate exposures;
/// `r = inf` is the max-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationNorm {
    #[serde(deserialize_with = "flex::f64", serialize_with = "flex::ser_f64")]
    pub r: f64,
}

impl Default for AggregationNorm {
    fn default() -> Self {
        Self { r: 1.0 }
    }
}

impl AggregationNorm {
    pub const ONE: Self = Self { r: 1.0 };
    pub const MAX: Self = Self { r: f64::INFINITY };

    pub fn new(r: f64) -> Self {
        Self { r }
    }

    pub fn is_one(&self) -> bool {
        self.r == 1.0
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        if self.r.is_infinite() {
            x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        } else if self.r == 1.0 {
            crate::numeric::compensated_sum(x.iter().map(|v| v.abs()))
        } else {
            let s = crate::numeric::compensated_sum(x.iter().map(|v| v.abs().powf(self.r)));
            s.powf(1.0 / self.r)
        }
    }

    /// Norm of a vector with `count` entries equal to `c >= 0` and zeros elsewhere.
    pub fn norm_of_flat(&self, c: f64, count: usize) -> f64 {
        if count == 0 {
            0.0
        } else if self.r.is_infinite() {
            c
        } else {
            c * (count as f64).powf(1.0 / self.r)
        }
    }

    pub fn label(&self) -> String {
        fmt_ext(self.r)
    }
}

fn fmt_ext(r: f64) -> String {
    if r.is_infinite() {
        "inf".into()
    } else {
        format!("{r}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketScenario {
    pub edges: EdgeModel,
    pub claims: ClaimSpec,
    #[serde(default = "default_weights")]
    pub weights: WeightScheme,
    #[serde(default)]
    pub norm: AggregationNorm,
}

fn default_weights() -> WeightScheme {
    WeightScheme::Proportional
}

impl MarketScenario {
    pub fn new(edges: EdgeModel, claims: ClaimSpec) -> Self {
        Self {
            edges,
            claims,
            weights: WeightScheme::Proportional,
            norm: AggregationNorm::ONE,
        }
    }

    pub fn with_weights(mut self, weights: WeightScheme) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_norm(mut self, norm: AggregationNorm) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_dependence(mut self, dependence: Dependence) -> Self {
        self.claims.dependence = dependence;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.claims.alpha = alpha;
        self
    }

    pub fn agents(&self) -> usize {
        self.edges.agents()
    }

    pub fn objects(&self) -> usize {
        self.edges.objects()
    }

    pub fn alpha(&self) -> f64 {
        self.claims.alpha
    }

    pub fn dependence(&self) -> Dependence {
        self.claims.dependence
    }

    pub fn probabilities(&self) -> Result<ProbMatrix> {
        materialize_probabilities(&self.edges)
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        validate_scenario(self)
    }

    /// Validates and returns the probability matrix in one step.
    pub fn checked_probabilities(&self) -> Result<ProbMatrix> {
        self.validate().map_err(Error::InvalidScenario)?;
        self.probabilities()
    }
}

/// One broken invariant of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Collects every violated invariant of `s`; never panics.
pub fn validate_scenario(s: &MarketScenario) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let c = &s.claims;
    if !(c.alpha > 0.0) || !c.alpha.is_finite() {
        out.push(Violation::new(
            "claims.alpha",
            format!("alpha must be positive (got {})", c.alpha),
        ));
    }
    if c.scales.is_empty() {
        out.push(Violation::new("claims.scales", "at least one object is required"));
    }
    for (j, &k) in c.scales.iter().enumerate() {
        if !(k > 0.0) || !k.is_finite() {
            out.push(Violation::new(
                format!("claims.scales[{j}]"),
                format!("scale K_{j} must be positive (got {k})"),
            ));
        }
    }

    let edge_violations = s.edges.violations();
    let edges_ok = edge_violations.is_empty();
    out.extend(edge_violations);

    let (q, d) = (s.edges.agents(), s.edges.objects());
    if edges_ok && c.scales.len() != d {
        out.push(Violation::new(
            "claims.scales",
            format!("{} scales given for {d} objects", c.scales.len()),
        ));
    }

    if !(s.norm.r > 0.0) {
        out.push(Violation::new(
            "norm.r",
            format!("norm parameter must be positive (got {})", s.norm.r),
        ));
    }

    match &s.weights {
        WeightScheme::Proportional => {}
        WeightScheme::Compensated { r } => {
            if !(*r > 0.0) {
                out.push(Violation::new(
                    "weights.r",
                    format!("compensation parameter must be positive (got {r})"),
                ));
            }
        }
        WeightScheme::ExplicitWeights { w } => {
            if w.len() != q || w.iter().any(|row| row.len() != d) {
                out.push(Violation::new(
                    "weights.w",
                    format!("weight matrix must be {q} x {d}"),
                ));
            } else {
                for (i, row) in w.iter().enumerate() {
                    for (j, &x) in row.iter().enumerate() {
                        if !(x >= 0.0) || !x.is_finite() {
                            out.push(Violation::new(
                                format!("weights.w[{i}][{j}]"),
                                format!("weight {x} must be finite and nonnegative"),
                            ));
                        }
                    }
                }
                if edges_ok {
                    if let Ok(p) = materialize_probabilities(&s.edges) {
                        for j in 0..d {
                            let sum: f64 = (0..q).filter(|&i| p.get(i, j) > 0.0).map(|i| w[i][j]).sum();
                            if sum > 1.0 + WEIGHT_SUM_SLACK {
                                out.push(Violation::new(
                                    format!("weights.w[..][{j}]"),
                                    format!("object {j}: weights of potential insurers sum to {sum} > 1"),
                                ));
                            }
                        }
                    }
                }
            }
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Lenient numeric deserializers: accept JSON numbers or decimal strings,
/// including `"inf"` for the max-norm.
pub(crate) mod flex {
    use serde::de::{self, Deserializer};
    use serde::{Deserialize, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        F(f64),
        S(String),
    }

    fn parse(n: Num) -> Result<f64, String> {
        match n {
            Num::F(x) => Ok(x),
            Num::S(s) => {
                let t = s.trim().to_ascii_lowercase();
                match t.as_str() {
                    "inf" | "infinity" | "+inf" | "max" => Ok(f64::INFINITY),
                    _ => t.parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}")),
                }
            }
        }
    }

    pub fn f64<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        parse(Num::deserialize(d)?).map_err(de::Error::custom)
    }

    pub fn vec_f64<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Num>::deserialize(d)?
            .into_iter()
            .map(|n| parse(n).map_err(de::Error::custom))
            .collect()
    }

    pub fn mat_f64<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        Vec::<Vec<Num>>::deserialize(d)?
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|n| parse(n).map_err(de::Error::custom))
                    .collect()
            })
            .collect()
    }

    pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(b: f64) -> MarketScenario {
        MarketScenario::new(
            EdgeModel::Toy { b },
            ClaimSpec::unit(2.0, 3, Dependence::AsymptoticallyIndependent),
        )
    }

    #[test]
    fn toy_zero_is_identity() {
        let p = materialize_probabilities(&EdgeModel::Toy { b: 0.0 }).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn toy_half_first_row() {
        let p = materialize_probabilities(&EdgeModel::Toy { b: 0.5 }).unwrap();
        assert_eq!(p.row(0), &[1.0, 0.5, 0.25]);
        assert_eq!(p.row(1), &[0.25, 1.0, 0.5]);
        assert_eq!(p.row(2), &[0.5, 0.25, 1.0]);
    }

    #[test]
    fn toy_one_equals_complete_homogeneous() {
        let a = materialize_probabilities(&EdgeModel::Toy { b: 1.0 }).unwrap();
        let b = materialize_probabilities(&EdgeModel::Homogeneous { q: 3, d: 3, p: 1.0 }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn homogeneous_fill() {
        let p = materialize_probabilities(&EdgeModel::Homogeneous { q: 2, d: 3, p: 0.3 }).unwrap();
        assert_eq!(p.rows(), vec![vec![0.3; 3]; 2]);
    }

    #[test]
    fn rasch_rejects_product_above_one() {
        let m = EdgeModel::Rasch {
            beta: vec![0.5, 2.0],
            delta: vec![0.4, 0.6],
        };
        let Err(Error::InvalidScenario(v)) = materialize_probabilities(&m) else {
            panic!("expected rejection");
        };
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "edges.rasch[1][1]");
    }

    #[test]
    fn valid_toy_passes() {
        assert!(validate_scenario(&toy(0.5)).is_ok());
    }

    #[test]
    fn zero_alpha_is_reported() {
        let s = toy(0.5).with_alpha(0.0);
        let v = validate_scenario(&s).unwrap_err();
        assert!(v.iter().any(|x| x.message.contains("alpha must be positive")));
    }

    #[test]
    fn explicit_weight_column_sum_is_reported() {
        let s = MarketScenario::new(
            EdgeModel::Homogeneous { q: 2, d: 2, p: 0.5 },
            ClaimSpec::unit(1.5, 2, Dependence::AsymptoticallyIndependent),
        )
        .with_weights(WeightScheme::ExplicitWeights {
            w: vec![vec![0.5, 0.6], vec![0.5, 0.6]],
        });
        let v = validate_scenario(&s).unwrap_err();
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("object 1"), "{}", v[0]);
    }

    #[test]
    fn scale_count_mismatch() {
        let s = MarketScenario::new(
            EdgeModel::Homogeneous { q: 2, d: 4, p: 0.5 },
            ClaimSpec::unit(1.0, 3, Dependence::FullyDependent),
        );
        assert!(validate_scenario(&s).is_err());
    }

    #[test]
    fn norms_of_unit_vectors_are_one() {
        for r in [0.5, 1.0, 2.0, 7.0, f64::INFINITY] {
            let n = AggregationNorm::new(r);
            assert!((n.norm(&[0.0, 1.0, 0.0]) - 1.0).abs() < 1e-15);
            assert!((n.norm_of_flat(0.25, 4) - n.norm(&[0.25; 4])).abs() < 1e-14);
        }
    }

    #[test]
    fn scenario_json_accepts_strings_and_inf() {
        let s: MarketScenario = serde_json::from_str(
            r#"{
                "edges": {"kind": "homogeneous", "q": 3, "d": 2, "p": "0.25"},
                "claims": {"alpha": "1.5", "scales": [1, "2"], "dependence": "independent"},
                "weights": {"kind": "compensated", "r": "inf"},
                "norm": {"r": "inf"}
            }"#,
        )
        .unwrap();
        assert_eq!(s.claims.scales, vec![1.0, 2.0]);
        assert!(s.norm.r.is_infinite());
        assert!(validate_scenario(&s).is_ok());
        let back: MarketScenario = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
