//! Parameter sweeps and the curve datasets for figures 2 to 9.
//!
//! Every result is a flat [`Row`]; series within one dataset are told apart
//! by qualifiers in the quantity name, e.g. `root_C_1_ind[alpha=0.8]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ExactEngine, Method};
use crate::model::{AggregationNorm, ClaimSpec, Dependence, EdgeModel, MarketScenario};
use crate::montecarlo::{empirical_tail_constant, SimConfig, Target};
use crate::poisson::PoissonApproximator;
use crate::risk::diversification_benefit_with;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    ToyB,
    HomogeneousP,
    RaschBetaCommon,
    RaschDeltaCommon,
    Alpha,
    NormR,
}

impl SweepParameter {
    pub fn label(self) -> &'static str {
        match self {
            SweepParameter::ToyB => "toy_b",
            SweepParameter::HomogeneousP => "homogeneous_p",
            SweepParameter::RaschBetaCommon => "rasch_beta_common",
            SweepParameter::RaschDeltaCommon => "rasch_delta_common",
            SweepParameter::Alpha => "alpha",
            SweepParameter::NormR => "norm_r",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Output {
    #[serde(rename = "C_i_ind")]
    CiInd,
    #[serde(rename = "C_i_dep")]
    CiDep,
    #[serde(rename = "C_S_ind")]
    CsInd,
    #[serde(rename = "C_S_dep")]
    CsDep,
    #[serde(rename = "B_ind")]
    BInd,
    #[serde(rename = "B_dep")]
    BDep,
    D,
    #[serde(rename = "spectral")]
    Spectral,
    #[serde(rename = "poisson_approx")]
    PoissonApprox,
    #[serde(rename = "mc_check")]
    McCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
    pub outputs: Vec<Output>,
}

/// One output line: `param,value,quantity,regime,method,point,error_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub param: String,
    pub value: f64,
    pub quantity: String,
    pub regime: String,
    pub method: String,
    pub point: f64,
    pub error_radius: f64,
}

impl Row {
    fn new(param: &str, value: f64, quantity: String, regime: &str, method: &str, point: f64, error_radius: f64) -> Self {
        Self {
            param: param.to_string(),
            value,
            quantity,
            regime: regime.to_string(),
            method: method.to_string(),
            point,
            error_radius,
        }
    }
}

/// `base` with the swept parameter set to `value`.
pub fn apply_parameter(base: &MarketScenario, parameter: SweepParameter, value: f64) -> Result<MarketScenario> {
    let mut s = base.clone();
    match parameter {
        SweepParameter::ToyB => s.edges = EdgeModel::Toy { b: value },
        SweepParameter::HomogeneousP => match &mut s.edges {
            EdgeModel::Homogeneous { p, .. } => *p = value,
            _ => return Err(Error::InvalidArgument("homogeneous_p needs a homogeneous edge model".into())),
        },
        SweepParameter::RaschBetaCommon => match &mut s.edges {
            EdgeModel::Rasch { beta, .. } => beta.iter_mut().for_each(|b| *b = value),
            _ => return Err(Error::InvalidArgument("rasch_beta_common needs a Rasch edge model".into())),
        },
        SweepParameter::RaschDeltaCommon => match &mut s.edges {
            EdgeModel::Rasch { delta, .. } => delta.iter_mut().for_each(|d| *d = value),
            _ => return Err(Error::InvalidArgument("rasch_delta_common needs a Rasch edge model".into())),
        },
        SweepParameter::Alpha => s.claims.alpha = value,
        SweepParameter::NormR => s.norm = AggregationNorm::new(value),
    }
    s.validate().map_err(Error::InvalidScenario)?;
    Ok(s)
}

/// Settings shared by all grid points of a sweep.
#[derive(Debug, Clone)]
pub struct SweepContext {
    pub engine: ExactEngine,
    pub poisson: PoissonApproximator,
    pub sim: SimConfig,
}

impl Default for SweepContext {
    fn default() -> Self {
        Self {
            engine: ExactEngine::default(),
            poisson: PoissonApproximator::default(),
            sim: SimConfig::new(100_000, 0),
        }
    }
}

fn regime_rows(
    ctx: &SweepContext,
    s: &MarketScenario,
    output: Output,
    param: &str,
    value: f64,
    rows: &mut Vec<Row>,
) -> Result<()> {
    let e = &ctx.engine;
    let ind = Dependence::AsymptoticallyIndependent;
    let dep = Dependence::FullyDependent;
    match output {
        Output::CiInd | Output::CiDep => {
            let regime = if output == Output::CiInd { ind } else { dep };
            for i in 0..s.agents() {
                let c = e.individual_constant(s, i, regime)?;
                rows.push(Row::new(param, value, format!("C_{}_{}", i + 1, regime.label()), regime.label(), c.method.label(), c.value, c.error_radius));
            }
        }
        Output::CsInd | Output::CsDep => {
            let regime = if output == Output::CsInd { ind } else { dep };
            let c = e.systemic_constant(s, regime)?;
            rows.push(Row::new(param, value, format!("C_S_{}", regime.label()), regime.label(), c.method.label(), c.value, c.error_radius));
        }
        Output::BInd | Output::BDep => {
            let regime = if output == Output::BInd { ind } else { dep };
            let c = e.uninsured_constant(s, regime)?;
            rows.push(Row::new(param, value, format!("B_{}", regime.label()), regime.label(), c.method.label(), c.value, c.error_radius));
        }
        Output::D => match diversification_benefit_with(e, s) {
            Ok(d) => rows.push(Row::new(param, value, "D".into(), "ind", Method::ClosedForm.label(), d, 0.0)),
            Err(Error::Degenerate) => {}
            Err(err) => return Err(err),
        },
        Output::Spectral => {
            let measures = [
                (ind, e.spectral_measure_ind(s)),
                (dep, e.spectral_support_dep(s)),
            ];
            for (regime, m) in measures {
                let m = match m {
                    Ok(m) => m,
                    Err(Error::Degenerate) => continue,
                    Err(err) => return Err(err),
                };
                for a in &m.atoms {
                    let point: Vec<String> = a.point.iter().map(|x| format!("{x}")).collect();
                    rows.push(Row::new(param, value, format!("spectral[{}]", point.join(";")), regime.label(), m.method.label(), a.mass, 0.0));
                }
            }
        }
        Output::PoissonApprox => {
            let p = &ctx.poisson;
            for i in 0..s.agents() {
                let a = p.individual_constant(s, i)?;
                rows.push(Row::new(param, value, format!("C_{}_ind_poisson", i + 1), "ind", "poisson", a.value, a.bound));
            }
            let a = p.systemic_constant(s)?;
            rows.push(Row::new(param, value, "C_S_ind_poisson".into(), "ind", "poisson", a.value, a.bound));
            let dep_approx = p.dependent_constants(s)?;
            rows.push(Row::new(param, value, "C_S_dep_poisson".into(), "dep", "poisson", dep_approx.systemic.value, dep_approx.systemic.bound));
            let u = p.uninsured(s)?;
            rows.push(Row::new(param, value, "B_ind_poisson".into(), "ind", "poisson", u.tail_constant_ind.value, u.tail_constant_ind.bound));
            rows.push(Row::new(param, value, "B_dep_poisson".into(), "dep", "poisson", u.tail_constant_dep.value, u.tail_constant_dep.bound));
        }
        Output::McCheck => {
            let regime = s.dependence();
            let targets = [
                (Target::Aggregate(s.norm), "C_S"),
                (Target::Agent(0), "C_1"),
            ];
            for (target, name) in targets {
                let r = empirical_tail_constant(target, s, &ctx.sim)?;
                let est = r.plateau();
                rows.push(Row::new(param, value, format!("{name}_{}_mc", regime.label()), regime.label(), Method::MonteCarlo.label(), est.point, est.half_width));
            }
        }
    }
    Ok(())
}

/// Runs `spec` over its grid; grid points run in parallel, rows are
/// returned in grid order.
pub fn run_sweep(base: &MarketScenario, spec: &SweepSpec, ctx: &SweepContext) -> Result<Vec<Row>> {
    if spec.grid.is_empty() || spec.grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("sweep grid must be non-empty and strictly increasing".into()));
    }
    let param = spec.parameter.label();
    let chunks: Vec<Vec<Row>> = spec
        .grid
        .par_iter()
        .map(|&v| {
            let s = apply_parameter(base, spec.parameter, v)?;
            let mut rows = Vec::new();
            for &o in &spec.outputs {
                regime_rows(ctx, &s, o, param, v, &mut rows)?;
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(chunks.concat())
}

/// `0, step, 2 step, ..., 1` with the endpoint included.
pub fn unit_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidArgument("grid step must lie in (0, 1]".into()));
    }
    let n = (1.0 / step).round() as usize;
    if ((n as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("grid step must divide 1".into()));
    }
    Ok((0..=n).map(|k| k as f64 / n as f64).collect())
}

pub const FIGURE_ALPHAS: [f64; 5] = [0.8, 1.0, 1.5, 3.0, 5.0];
pub const BENEFIT_ALPHAS: [f64; 5] = [0.7, 0.8, 1.0, 3.0, 5.0];
pub const FIGURE_NORMS: [f64; 5] = [1.0, 2.0, 5.0, 10.0, f64::INFINITY];
pub const DOMINANT_ONE: [f64; 5] = [1.0, 0.1, 0.1, 0.1, 0.1];
pub const WEAK_ONE: [f64; 5] = [0.1, 1.0, 1.0, 1.0, 1.0];
pub const RASCH_FIXED: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

const Q: usize = 5;
const D: usize = 5;

/// Dataset for one figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure {
    pub number: u32,
    pub slug: String,
    pub description: String,
    pub step: f64,
    pub rows: Vec<Row>,
}

fn alpha_tag(a: f64) -> String {
    format!("alpha={a}")
}

fn norm_tag(r: f64) -> String {
    format!("r={}", AggregationNorm::new(r).label())
}

fn vec_tag(name: &str, v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("{name}=({})", parts.join(" "))
}

fn unit(alpha: f64, edges: EdgeModel) -> MarketScenario {
    let d = edges.objects();
    MarketScenario::new(edges, ClaimSpec::unit(alpha, d, Dependence::AsymptoticallyIndependent))
}

type Series = Box<dyn Fn(f64) -> Result<Vec<(String, &'static str, Method, f64)>> + Sync>;

fn curve(param: &str, grid: &[f64], series: &[Series]) -> Result<Vec<Row>> {
    let chunks: Vec<Vec<Row>> = grid
        .par_iter()
        .map(|&x| {
            let mut rows = Vec::new();
            for f in series {
                for (quantity, regime, method, point) in f(x)? {
                    rows.push(Row::new(param, x, quantity, regime, method.label(), point, 0.0));
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(chunks.concat())
}

fn root_ind(s: &MarketScenario, i: usize) -> Result<(f64, Method)> {
    let c = ExactEngine::default().individual_constant_ind(s, i)?;
    Ok((c.value.powf(1.0 / s.alpha()), c.method))
}

fn benefit(s: &MarketScenario) -> Result<Option<f64>> {
    match diversification_benefit_with(&ExactEngine::default(), s) {
        Ok(d) => Ok(Some(d)),
        Err(Error::Degenerate) => Ok(None),
        Err(e) => Err(e),
    }
}

fn toy_figure(grid: &[f64]) -> Result<Vec<Row>> {
    let series: Vec<Series> = FIGURE_ALPHAS
        .iter()
        .map(|&a| -> Series {
            Box::new(move |b| {
                let s = unit(a, EdgeModel::Toy { b });
                let e = ExactEngine::default();
                let c1 = e.individual_constant_ind(&s, 0)?;
                let cs = e.systemic_constant_ind(&s)?;
                let cd = e.systemic_constant_dep(&s)?;
                let t = alpha_tag(a);
                Ok(vec![
                    (format!("C_1_ind[{t}]"), "ind", c1.method, c1.value),
                    (format!("root_C_1_ind[{t}]"), "ind", c1.method, c1.value.powf(1.0 / a)),
                    (format!("C_S_ind[{t}]"), "ind", cs.method, cs.value),
                    (format!("C_S_dep[{t}]"), "dep", cd.method, cd.value),
                ])
            })
        })
        .collect();
    curve("b", grid, &series)
}

fn homogeneous_alpha_figure(grid: &[f64]) -> Result<Vec<Row>> {
    let series: Vec<Series> = FIGURE_ALPHAS
        .iter()
        .map(|&a| -> Series {
            Box::new(move |p| {
                let (v, m) = root_ind(&unit(a, EdgeModel::Homogeneous { q: Q, d: D, p }), 0)?;
                Ok(vec![(format!("root_C_1_ind[{}]", alpha_tag(a)), "ind", m, v)])
            })
        })
        .collect();
    curve("p", grid, &series)
}

fn ind_vs_dep_figure(grid: &[f64]) -> Result<Vec<Row>> {
    let series: Vec<Series> = [0.8, 3.0, 5.0]
        .iter()
        .map(|&a| -> Series {
            Box::new(move |p| {
                let s = unit(a, EdgeModel::Homogeneous { q: Q, d: D, p });
                let e = ExactEngine::default();
                let t = alpha_tag(a);
                let root = |x: f64| x.powf(1.0 / a);
                let ci = e.individual_constant_ind(&s, 0)?;
                let cd = e.individual_constant_dep(&s, 0)?;
                let si = e.systemic_constant_ind(&s)?;
                let sd = e.systemic_constant_dep(&s)?;
                Ok(vec![
                    (format!("root_C_1_ind[{t}]"), "ind", ci.method, root(ci.value)),
                    (format!("root_C_1_dep[{t}]"), "dep", cd.method, root(cd.value)),
                    (format!("root_C_S_ind[{t}]"), "ind", si.method, root(si.value)),
                    (format!("root_C_S_dep[{t}]"), "dep", sd.method, root(sd.value)),
                ])
            })
        })
        .collect();
    curve("p", grid, &series)
}

fn rasch_beta_figure(grid: &[f64]) -> Result<Vec<Row>> {
    let mut series: Vec<Series> = Vec::new();
    for delta in [DOMINANT_ONE, WEAK_ONE] {
        for &a in &FIGURE_ALPHAS {
            series.push(Box::new(move |beta| {
                let s = unit(a, EdgeModel::Rasch { beta: vec![beta; Q], delta: delta.to_vec() });
                let (v, m) = root_ind(&s, 0)?;
                Ok(vec![(format!("root_C_1_ind[{};{}]", vec_tag("delta", &delta), alpha_tag(a)), "ind", m, v)])
            }));
        }
    }
    curve("beta", grid, &series)
}

fn rasch_delta_figure(grid: &[f64]) -> Result<Vec<Row>> {
    let mut series: Vec<Series> = Vec::new();
    for beta in [DOMINANT_ONE, WEAK_ONE] {
        for &a in &FIGURE_ALPHAS {
            series.push(Box::new(move |delta| {
                let s = unit(a, EdgeModel::Rasch { beta: beta.to_vec(), delta: vec![delta; D] });
                let mut out = Vec::new();
                for i in 0..2 {
                    let (v, m) = root_ind(&s, i)?;
                    out.push((format!("root_C_{}_ind[{};{}]", i + 1, vec_tag("beta", &beta), alpha_tag(a)), "ind", m, v));
                }
                Ok(out)
            }));
        }
    }
    curve("delta", grid, &series)
}

fn benefit_series(a: f64, tag: String, make: impl Fn(f64) -> EdgeModel + Sync + 'static) -> Series {
    Box::new(move |x| {
        Ok(benefit(&unit(a, make(x)))?
            .map(|d| (format!("D[{tag}]"), "ind", Method::ClosedForm, d))
            .into_iter()
            .collect())
    })
}

fn benefit_homogeneous_toy_figure(grid: &[f64]) -> Result<Vec<Row>> {
    let mut series: Vec<Series> = Vec::new();
    for &a in &BENEFIT_ALPHAS {
        series.push(benefit_series(a, format!("model=homogeneous;{}", alpha_tag(a)), |p| EdgeModel::Homogeneous { q: Q, d: D, p }));
        series.push(benefit_series(a, format!("model=toy;{}", alpha_tag(a)), |b| EdgeModel::Toy { b }));
    }
    curve("x", grid, &series)
}

fn benefit_rasch_figure(grid: &[f64]) -> Result<Vec<Row>> {
    let mut series: Vec<Series> = Vec::new();
    for &a in &BENEFIT_ALPHAS {
        let fixed = vec_tag("beta", &RASCH_FIXED);
        series.push(benefit_series(a, format!("{fixed};vary=delta;{}", alpha_tag(a)), |x| EdgeModel::Rasch {
            beta: RASCH_FIXED.to_vec(),
            delta: vec![x; D],
        }));
        let fixed = vec_tag("delta", &RASCH_FIXED);
        series.push(benefit_series(a, format!("{fixed};vary=beta;{}", alpha_tag(a)), |x| EdgeModel::Rasch {
            beta: vec![x; Q],
            delta: RASCH_FIXED.to_vec(),
        }));
    }
    curve("x", grid, &series)
}

fn norm_figure(grid: &[f64]) -> Result<Vec<Row>> {
    let mut series: Vec<Series> = Vec::new();
    for a in [0.8, 3.0] {
        for &r in &FIGURE_NORMS {
            series.push(Box::new(move |p| {
                let s = unit(a, EdgeModel::Homogeneous { q: Q, d: D, p }).with_norm(AggregationNorm::new(r));
                let c = ExactEngine::default().systemic_constant_ind(&s)?;
                Ok(vec![(format!("root_C_S_ind[{};{}]", norm_tag(r), alpha_tag(a)), "ind", c.method, c.value.powf(1.0 / a))])
            }));
        }
    }
    curve("p", grid, &series)
}

/// Catalogue of figure datasets: `(number, slug, description)`.
pub const FIGURES: [(u32, &str, &str); 8] = [
    (2, "toy_agent_constant_vs_b", "Toy model: C^1_ind, its alpha-th root, C^S_ind and C^S_dep against b"),
    (3, "homogeneous_agent_constant_by_alpha", "Homogeneous q=d=5: (C^1_ind)^(1/alpha) against p"),
    (4, "homogeneous_ind_vs_dep", "Homogeneous q=d=5: alpha-th roots of C^1 and C^S in both regimes against p"),
    (5, "rasch_agent_constant_vs_beta", "Rasch q=d=5: (C^1_ind)^(1/alpha) against a common beta for two delta vectors"),
    (6, "rasch_agent_constants_vs_delta", "Rasch q=d=5: (C^i_ind)^(1/alpha), agents 1 and 2, against a common delta for two beta vectors"),
    (7, "benefit_homogeneous_and_toy", "Diversification benefit D against p (homogeneous q=d=5) and b (toy)"),
    (8, "homogeneous_systemic_by_norm", "Homogeneous q=d=5: (C^S_ind)^(1/alpha) against p for r-norms"),
    (9, "benefit_rasch", "Rasch q=d=5: D against a common delta (fixed beta) and a common beta (fixed delta)"),
];

/// Builds one figure dataset on a `[0, 1]` grid with spacing `step`.
pub fn figure(number: u32, step: f64) -> Result<Figure> {
    let grid = unit_grid(step)?;
    let (_, slug, description) = FIGURES
        .iter()
        .find(|f| f.0 == number)
        .ok_or_else(|| Error::InvalidArgument(format!("no dataset for figure {number}")))?;
    let rows = match number {
        2 => toy_figure(&grid),
        3 => homogeneous_alpha_figure(&grid),
        4 => ind_vs_dep_figure(&grid),
        5 => rasch_beta_figure(&grid),
        6 => rasch_delta_figure(&grid),
        7 => benefit_homogeneous_toy_figure(&grid),
        8 => norm_figure(&grid),
        _ => benefit_rasch_figure(&grid),
    }?;
    Ok(Figure {
        number,
        slug: slug.to_string(),
        description: description.to_string(),
        step,
        rows,
    })
}

pub fn figures(step: f64) -> Result<Vec<Figure>> {
    FIGURES.iter().map(|f| figure(f.0, step)).collect()
}

/// Points of one series, in grid order.
pub fn series<'a>(rows: &'a [Row], quantity: &str) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.quantity == quantity)
        .map(|r| (r.value, r.point))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoints() {
        let g = unit_grid(0.25).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(unit_grid(0.3).is_err());
        assert!(unit_grid(0.0).is_err());
    }

    #[test]
    fn parameters_are_applied() {
        let base = unit(2.0, EdgeModel::Homogeneous { q: 2, d: 3, p: 0.1 });
        let s = apply_parameter(&base, SweepParameter::HomogeneousP, 0.7).unwrap();
        assert_eq!(s.edges, EdgeModel::Homogeneous { q: 2, d: 3, p: 0.7 });
        assert!(apply_parameter(&base, SweepParameter::RaschBetaCommon, 0.5).is_err());
        assert!(apply_parameter(&base, SweepParameter::HomogeneousP, 1.5).is_err());
        let s = apply_parameter(&base, SweepParameter::NormR, f64::INFINITY).unwrap();
        assert!(s.norm.r.is_infinite());
    }

    #[test]
    fn sweep_rows_follow_grid_order() {
        let base = unit(1.5, EdgeModel::Toy { b: 0.0 });
        let spec = SweepSpec {
            parameter: SweepParameter::ToyB,
            grid: vec![0.0, 0.5, 1.0],
            outputs: vec![Output::CsInd, Output::CiInd],
        };
        let rows = run_sweep(&base, &spec, &SweepContext::default()).unwrap();
        assert_eq!(rows.len(), 3 * 4);
        assert_eq!(rows[0].quantity, "C_S_ind");
        assert!((rows[0].point - 3.0).abs() < 1e-12);
        assert_eq!(rows[4].value, 0.5);
    }

    #[test]
    fn every_figure_is_built() {
        for f in figures(0.25).unwrap() {
            assert!(!f.rows.is_empty(), "figure {}", f.number);
            assert!(f.rows.iter().all(|r| r.point.is_finite()));
        }
    }
}
