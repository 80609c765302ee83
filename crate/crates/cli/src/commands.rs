use std::path::PathBuf;

use netrisk::exact::{EngineConfig, ExactEngine, Estimate, McFallback};
use netrisk::montecarlo::{count_uninsured, empirical_tail_constant};
use netrisk::poisson::{noninsured_count_approx, PoissonApproximator, DEFAULT_TOL};
use netrisk::risk::{cote_asymptotic, diversification_benefit_with, ordering_report_with, var_asymptotic};
use netrisk::sweep::{figure, run_sweep, SweepContext, FIGURES};
use netrisk::{Dependence, Error, MarketScenario, SimConfig, Target};
use serde::Serialize;

use crate::config::Config;
use crate::error::{CliError, CliResult, EXIT_MC_CHECK};
use crate::output::{ensure_dir, fmt_f64, hash_of, sha256_hex, write_csv, write_json, Preamble, Record};

const IND: Dependence = Dependence::AsymptoticallyIndependent;
const DEP: Dependence = Dependence::FullyDependent;
const DEFAULT_REPLICATES: u64 = 1_000_000;
const DEFAULT_FIGURE_STEP: f64 = 0.01;

/// Command-line overrides of the config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub tol: Option<f64>,
}

pub struct Run {
    pub config: Config,
    pub overrides: Overrides,
    pub out: PathBuf,
}

/// What a subcommand produced.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub status: &'static str,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub exit_code: i32,
}

impl Summary {
    fn ok(files: Vec<PathBuf>, notes: Vec<String>) -> Self {
        Self {
            status: "ok",
            files: files.iter().map(|p| p.display().to_string()).collect(),
            notes,
            exit_code: 0,
        }
    }
}

impl Run {
    fn sim(&self) -> CliResult<SimConfig> {
        let mc = &self.config.mc;
        let mut cfg = SimConfig::new(
            self.overrides.replicates.or(mc.replicates).unwrap_or(DEFAULT_REPLICATES),
            self.overrides.seed.or(mc.seed).unwrap_or(0),
        );
        if let Some(t) = &mc.thresholds {
            cfg = cfg.with_thresholds(t.iter().map(|d| d.0).collect());
        }
        if let Some(c) = mc.confidence {
            cfg = cfg.with_confidence(c.0);
        }
        Ok(cfg)
    }

    fn tol(&self) -> CliResult<f64> {
        let tol = self.overrides.tol.or(self.config.tol.map(|d| d.0)).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::invalid("invalid_argument", format!("tol must lie in (0, 1), got {tol}")));
        }
        Ok(tol)
    }

    fn engine(&self) -> CliResult<ExactEngine> {
        let mut config = EngineConfig::default();
        if self.config.allow_mc_fallback {
            let sim = self.sim()?;
            config.mc_fallback = Some(McFallback {
                replicates: sim.replicates,
                seed: sim.seed,
                confidence: sim.confidence,
            });
        }
        Ok(ExactEngine::new(config))
    }

    fn preamble(&self, s: &MarketScenario, seed: Option<u64>) -> CliResult<Preamble> {
        Ok(Preamble {
            scenario_hash: hash_of(s)?,
            alpha: fmt_f64(s.alpha()),
            seed,
        })
    }

    fn path(&self, name: &str) -> CliResult<PathBuf> {
        Ok(ensure_dir(&self.out)?.join(name))
    }
}

/// `Ok(None)` for errors that only mean "not defined for this scenario".
fn optional<T>(r: netrisk::Result<T>, what: &str, notes: &mut Vec<String>) -> CliResult<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::WeightSumViolated { .. } | Error::Unsupported(_) | Error::Degenerate | Error::InfiniteMean { .. })) => {
            notes.push(format!("{what} skipped: {e}"));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn record(quantity: String, regime: Dependence, e: &Estimate) -> Record {
    Record::scalar(quantity, regime.label(), e.method.label(), e.value, e.error_radius)
}

pub fn exact(run: &Run) -> CliResult<Summary> {
    let s = run.config.scenario()?;
    let engine = run.engine()?;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut constants = Vec::new();
    for regime in [IND, DEP] {
        let tag = regime.label();
        for i in 0..s.agents() {
            let e = engine.individual_constant(s, i, regime)?;
            rows.push(record(format!("C_{}_{tag}", i + 1), regime, &e));
            constants.push((format!("{}_{tag}", i + 1), regime, e));
        }
        let e = engine.systemic_constant(s, regime)?;
        rows.push(record(format!("C_S_{tag}"), regime, &e));
        constants.push((format!("S_{tag}"), regime, e));
        if let Some(e) = optional(engine.uninsured_constant(s, regime), &format!("B_{tag}"), &mut notes)? {
            rows.push(record(format!("B_{tag}"), regime, &e));
        }
    }
    if let Some(d) = optional(diversification_benefit_with(&engine, s), "D", &mut notes)? {
        rows.push(Record::scalar("D", "ind", "closed_form", d, 0.0));
    }
    if let Some(j) = &run.config.joint {
        if j.agents.iter().any(|&a| a == 0) {
            return Err(CliError::invalid("invalid_argument", "joint agents are one-based"));
        }
        let agents: Vec<usize> = j.agents.iter().map(|a| a - 1).collect();
        let u: Vec<f64> = j.thresholds.iter().map(|d| d.0).collect();
        let label = format!(
            "joint[agents={};u={}]",
            j.agents.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";"),
            u.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
        );
        for regime in [IND, DEP] {
            let e = engine.joint_tail_constant(s, regime, &agents, &u)?;
            rows.push(record(label.clone(), regime, &e));
        }
    }
    let alpha = s.alpha();
    for gamma in run.config.risk_levels.iter().map(|d| d.0) {
        for (name, regime, e) in &constants {
            let var = var_asymptotic(e.value, alpha, gamma)?;
            // d/dC (C / gamma)^{1/alpha} = var / (alpha C).
            let radius = if e.value > 0.0 { var * e.error_radius / (alpha * e.value) } else { 0.0 };
            let g = fmt_f64(gamma);
            rows.push(Record::scalar(format!("VaR_{name}[gamma={g}]"), regime.label(), e.method.label(), var, radius));
            if let Some(cote) = optional(cote_asymptotic(e.value, alpha, gamma), "CoTE", &mut notes)? {
                let k = alpha / (alpha - 1.0);
                rows.push(Record::scalar(format!("CoTE_{name}[gamma={g}]"), regime.label(), e.method.label(), cote, k * radius));
            }
        }
    }
    notes.dedup();
    let mut files = Vec::new();
    let csv = run.path("exact.csv")?;
    write_csv(&csv, &run.preamble(s, None)?, &rows)?;
    files.push(csv);
    let ordering = run.path("ordering.json")?;
    write_json(&ordering, &ordering_report_with(&engine, s)?)?;
    files.push(ordering);

    let mut spectral = Vec::new();
    for (regime, m) in [(IND, engine.spectral_measure_ind(s)), (DEP, engine.spectral_support_dep(s))] {
        match m {
            Ok(m) => {
                for a in &m.atoms {
                    let point: Vec<String> = a.point.iter().map(|x| fmt_f64(*x)).collect();
                    spectral.push(Record::scalar(format!("spectral[{}]", point.join(";")), regime.label(), m.method.label(), a.mass, 0.0));
                }
            }
            Err(e @ (Error::CapExceeded { .. } | Error::Degenerate | Error::Unsupported(_))) => {
                notes.push(format!("{} spectral measure skipped: {e}", regime.label()));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if !spectral.is_empty() {
        let path = run.path("spectral.csv")?;
        write_csv(&path, &run.preamble(s, None)?, &spectral)?;
        files.push(path);
    }
    Ok(Summary::ok(files, notes))
}

pub fn sweep(run: &Run) -> CliResult<Summary> {
    let s = run.config.scenario()?;
    let sweep = run
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::invalid("invalid_config", "the sweep subcommand needs a \"sweep\" section"))?;
    let spec = sweep.spec()?;
    let sim = run.sim()?;
    let seed = sim.seed;
    let ctx = SweepContext {
        engine: run.engine()?,
        poisson: PoissonApproximator::new(run.tol()?),
        sim,
    };
    let rows = run_sweep(s, &spec, &ctx)?;
    let uses_mc = spec.outputs.contains(&netrisk::Output::McCheck);
    let mut pre = run.preamble(s, uses_mc.then_some(seed))?;
    if spec.parameter == netrisk::SweepParameter::Alpha {
        pre.alpha = "swept".into();
    }
    let path = run.path(&format!("sweep_{}.csv", spec.parameter.label()))?;
    write_csv(&path, &pre, &rows.into_iter().map(Record::from).collect::<Vec<_>>())?;
    Ok(Summary::ok(vec![path], Vec::new()))
}

pub fn poisson(run: &Run) -> CliResult<Summary> {
    let s = run.config.scenario()?;
    let approx = PoissonApproximator::new(run.tol()?);
    let engine = run.engine()?;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let exact_row = |rows: &mut Vec<Record>, notes: &mut Vec<String>, q: String, r: Dependence, e: netrisk::Result<Estimate>| -> CliResult<()> {
        match e {
            Ok(e) => rows.push(record(q, r, &e)),
            Err(e @ Error::CapExceeded { .. }) => notes.push(format!("exact {q} skipped: {e}")),
            Err(e) => return Err(e.into()),
        }
        Ok(())
    };
    for i in 0..s.agents() {
        let a = approx.individual_constant(s, i)?;
        rows.push(Record::scalar(format!("C_{}_ind", i + 1), "ind", "poisson", a.value, a.bound));
        exact_row(&mut rows, &mut notes, format!("C_{}_ind", i + 1), IND, engine.individual_constant_ind(s, i))?;
    }
    if let Some(a) = optional(approx.systemic_constant(s), "C_S_ind approximation", &mut notes)? {
        rows.push(Record::scalar("C_S_ind", "ind", "poisson", a.value, a.bound));
    }
    exact_row(&mut rows, &mut notes, "C_S_ind".into(), IND, engine.systemic_constant_ind(s))?;
    if let Some(dep) = optional(approx.dependent_constants(s), "dependent approximations", &mut notes)? {
        for (i, a) in dep.individual.iter().enumerate() {
            rows.push(Record::scalar(format!("C_{}_dep", i + 1), "dep", "poisson", a.value, a.bound));
            exact_row(&mut rows, &mut notes, format!("C_{}_dep", i + 1), DEP, engine.individual_constant_dep(s, i))?;
        }
        rows.push(Record::scalar("C_S_dep", "dep", "poisson", dep.systemic.value, dep.systemic.bound));
        exact_row(&mut rows, &mut notes, "C_S_dep".into(), DEP, engine.systemic_constant_dep(s))?;
    }
    let u = approx.uninsured(s)?;
    rows.push(Record::scalar("B_ind", "ind", "poisson", u.tail_constant_ind.value, u.tail_constant_ind.bound));
    exact_row(&mut rows, &mut notes, "B_ind".into(), IND, engine.uninsured_constant(s, IND))?;
    rows.push(Record::scalar("B_dep", "dep", "poisson", u.tail_constant_dep.value, u.tail_constant_dep.bound));
    exact_row(&mut rows, &mut notes, "B_dep".into(), DEP, engine.uninsured_constant(s, DEP))?;
    let count = noninsured_count_approx(s)?;
    rows.push(Record::scalar("uninsured_count_lambda", "", "poisson", count.lambda, count.tv_bound));
    let path = run.path("poisson.csv")?;
    write_csv(&path, &run.preamble(s, None)?, &rows)?;
    Ok(Summary::ok(vec![path], notes))
}

#[derive(Debug, Serialize)]
struct TailCheck {
    target: String,
    exact: f64,
    exact_method: &'static str,
    threshold: f64,
    point: f64,
    half_width: f64,
    one_sided: bool,
    authoritative: bool,
    plateau_converged: bool,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct CountCheck {
    lambda: f64,
    tv_distance: f64,
    tv_bound: f64,
    noise_radius: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct McReport {
    scenario_hash: String,
    regime: &'static str,
    seed: u64,
    replicates: u64,
    confidence: f64,
    tail_checks: Vec<TailCheck>,
    uninsured_count: CountCheck,
    pass: bool,
}

pub fn mc(run: &Run) -> CliResult<Summary> {
    let s = run.config.scenario()?;
    let sim = run.sim()?;
    let engine = run.engine()?;
    let regime = s.dependence();
    let mut targets = vec![Target::Aggregate(s.norm)];
    targets.extend((0..s.agents()).map(Target::Agent));
    targets.push(Target::Uninsured);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for target in targets {
        let exact = match target {
            Target::Agent(i) => engine.individual_constant(s, i, regime)?,
            Target::Aggregate(_) => engine.systemic_constant(s, regime)?,
            Target::Uninsured => match optional(engine.uninsured_constant(s, regime), "uninsured tail", &mut notes)? {
                Some(e) => e,
                None => continue,
            },
        };
        let report = empirical_tail_constant(target, s, &sim)?;
        let label = target.label();
        for e in &report.estimates {
            rows.push(Record {
                param: "threshold".into(),
                value: Some(e.threshold),
                quantity: format!("tail[{label}]"),
                regime: regime.label().into(),
                method: "monte_carlo".into(),
                point: e.point,
                error_radius: e.half_width,
            });
        }
        let p = report.plateau();
        // Sampling fallback estimates carry their own radius.
        let pass = if exact.error_radius > 0.0 {
            (p.point - exact.value).abs() <= p.half_width + exact.error_radius
        } else {
            p.contains(exact.value)
        };
        rows.push(record(format!("tail[{label}]"), regime, &exact));
        checks.push(TailCheck {
            target: label,
            exact: exact.value,
            exact_method: exact.method.label(),
            threshold: p.threshold,
            point: p.point,
            half_width: p.half_width,
            one_sided: p.one_sided,
            authoritative: p.authoritative,
            plateau_converged: report.plateau_converged,
            pass,
        });
    }
    let count = count_uninsured(s, &sim)?;
    let count_check = CountCheck {
        pass: count.tv_distance <= count.tv_bound + 3.0 * count.noise_radius,
        lambda: count.lambda,
        tv_distance: count.tv_distance,
        tv_bound: count.tv_bound,
        noise_radius: count.noise_radius,
    };
    let pass = checks.iter().all(|c| c.pass) && count_check.pass;
    let report = McReport {
        scenario_hash: hash_of(s)?,
        regime: regime.label(),
        seed: sim.seed,
        replicates: sim.replicates,
        confidence: sim.confidence,
        tail_checks: checks,
        uninsured_count: count_check,
        pass,
    };
    let csv = run.path("mc.csv")?;
    write_csv(&csv, &run.preamble(s, Some(sim.seed))?, &rows)?;
    let json = run.path("mc_report.json")?;
    write_json(&json, &report)?;
    let mut summary = Summary::ok(vec![csv, json], notes);
    if !pass {
        summary.status = "mc_check_failed";
        summary.exit_code = EXIT_MC_CHECK;
    }
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    figure: u32,
    file: String,
    description: String,
    rows: usize,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    schema_version: u32,
    tool_version: &'static str,
    step: f64,
    columns: [&'static str; 7],
    figures: Vec<ManifestEntry>,
}

pub fn figures(run: &Run) -> CliResult<Summary> {
    let step = run.config.figures.step.map_or(DEFAULT_FIGURE_STEP, |d| d.0);
    let numbers: Vec<u32> = match &run.config.figures.only {
        Some(v) => v.clone(),
        None => FIGURES.iter().map(|f| f.0).collect(),
    };
    let mut entries = Vec::new();
    let mut files = Vec::new();
    for n in numbers {
        let f = figure(n, step)?;
        let name = format!("figure_{:02}_{}.csv", f.number, f.slug);
        let path = run.path(&name)?;
        let pre = Preamble {
            scenario_hash: hash_of(&(f.number, &f.slug, f.step))?,
            alpha: "per-series".into(),
            seed: None,
        };
        let rows = f.rows.len();
        write_csv(&path, &pre, &f.rows.into_iter().map(Record::from).collect::<Vec<_>>())?;
        entries.push(ManifestEntry {
            figure: f.number,
            file: name,
            description: f.description,
            rows,
            sha256: sha256_hex(&std::fs::read(&path)?),
        });
        files.push(path);
    }
    let manifest = Manifest {
        schema_version: crate::config::SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        step,
        columns: crate::output::COLUMNS,
        figures: entries,
    };
    let path = run.path("manifest.json")?;
    write_json(&path, &manifest)?;
    files.push(path);
    Ok(Summary::ok(files, Vec::new()))
}

