use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_netrisk");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("RISK_ENGINE_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

/// Data rows as `(param value, quantity, regime, method, point)`.
fn rows(path: &Path) -> Vec<(String, String, String, String, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# netrisk"));
    assert_eq!(lines.next().unwrap(), "param,value,quantity,regime,method,point,error_radius");
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 7, "{l}");
            (f[1].into(), f[2].into(), f[3].into(), f[4].into(), f[5].parse().unwrap())
        })
        .collect()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON object")
}

const TOY: &str = r#"{
  "schema_version": 1,
  "scenario": {
    "edges": {"kind": "toy", "b": "0.5"},
    "claims": {"alpha": 2, "scales": [1, 1, 1], "dependence": "ind"}
  },
  "risk_levels": ["0.01"]
}"#;

#[test]
fn exact_reports_toy_constants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TOY);
    let out = run(dir.path(), &["exact", "--config", &cfg, "--out", "res"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["status"], "ok");
    let rows = rows(&dir.path().join("res/exact.csv"));
    let get = |q: &str| rows.iter().find(|r| r.1 == q).map(|r| r.4).unwrap();
    assert_eq!(get("C_S_ind"), 3.0);
    assert_eq!(get("B_ind"), 0.0);
    // VaR of the systemic loss at gamma = 0.01: (3 / 0.01)^{1/2}.
    assert!((get("VaR_S_ind[gamma=0.01]") - 300f64.sqrt()).abs() < 1e-12);
    assert!(dir.path().join("res/ordering.json").exists());
}

#[test]
fn subcommand_flag_matches_positional() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TOY);
    assert!(run(dir.path(), &["exact", "--config", &cfg, "--out", "a"]).status.success());
    assert!(run(dir.path(), &["--subcommand", "exact", "--config", &cfg, "--out", "b"]).status.success());
    let a = std::fs::read(dir.path().join("a/exact.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/exact.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweep_over_edge_probability_is_increasing_for_small_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
          "schema_version": 1,
          "scenario": {
            "edges": {"kind": "homogeneous", "q": 3, "d": 3, "p": 0.5},
            "claims": {"alpha": 0.8, "scales": [1, 1, 1], "dependence": "ind"}
          },
          "sweep": {"parameter": "homogeneous_p", "grid": {"start": "0.1", "stop": "1", "step": "0.1"},
                    "outputs": ["C_S_ind"]}
        }"#,
    );
    let out = run(dir.path(), &["sweep", "--config", &cfg, "--out", "res"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&dir.path().join("res/sweep_homogeneous_p.csv"));
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[9].0, "1");
    for w in rows.windows(2) {
        assert!(w[1].4 > w[0].4);
    }
}

#[test]
fn figures_are_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schema_version": 1, "figures": {"step": "0.1", "only": [3, 8]}}"#);
    let a = Command::new(BIN)
        .args(["figures", "--config", &cfg, "--out", "a"])
        .current_dir(dir.path())
        .env("RISK_ENGINE_THREADS", "1")
        .output()
        .unwrap();
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = Command::new(BIN)
        .args(["figures", "--config", &cfg, "--out", "b"])
        .current_dir(dir.path())
        .env("RISK_ENGINE_THREADS", "3")
        .output()
        .unwrap();
    assert!(b.status.success());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    let figures = manifest["figures"].as_array().unwrap();
    assert_eq!(figures.len(), 2);
    for f in figures {
        let name = f["file"].as_str().unwrap();
        let x = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn invalid_scenario_exits_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "scenario": {"edges": {"kind": "toy", "b": 1.5},
            "claims": {"alpha": 2, "scales": [1, 1, 1], "dependence": "ind"}}}"#,
    );
    let out = run(dir.path(), &["exact", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["error"]["kind"], "invalid_scenario");
    assert!(!e["error"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["bogus"][..], &["exact"][..], &[][..]] {
        let out = run(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(stderr_json(&out)["error"]["kind"], "usage");
    }
    let out = Command::new(BIN)
        .args(["figures", "--out", "x"])
        .current_dir(dir.path())
        .env("RISK_ENGINE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unsupported_schema_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schema_version": 7}"#);
    let out = run(dir.path(), &["figures", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "unsupported_schema");
}

#[test]
fn poisson_rows_pair_approximations_with_exact_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "scenario": {
            "edges": {"kind": "homogeneous", "q": 4, "d": 3, "p": 0.1},
            "claims": {"alpha": 1.5, "scales": [1, 2, 1], "dependence": "ind"}}}"#,
    );
    let out = run(dir.path(), &["poisson", "--config", &cfg, "--out", "res"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("res/poisson.csv")).unwrap();
    let approx: Vec<&str> = text.lines().filter(|l| l.contains(",poisson,")).collect();
    assert!(approx.iter().any(|l| l.contains("C_S_ind")));
    for line in text.lines().filter(|l| l.contains(",C_1_ind,")) {
        assert!(line.ends_with(",0") || line.contains(",poisson,"));
    }
}

#[test]
fn mc_reports_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "scenario": {
            "edges": {"kind": "homogeneous", "q": 2, "d": 2, "p": 0.5},
            "claims": {"alpha": 1.5, "scales": [1, 1], "dependence": "dep"}},
            "mc": {"replicates": 50000, "seed": 4, "thresholds": [20, 50]}}"#,
    );
    let a = run(dir.path(), &["mc", "--config", &cfg, "--out", "a"]);
    let b = run(dir.path(), &["mc", "--config", &cfg, "--out", "b"]);
    assert!(matches!(a.status.code(), Some(0) | Some(3)));
    assert_eq!(a.status.code(), b.status.code());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a/mc_report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"].as_bool().unwrap(), a.status.code() == Some(0));
    assert_eq!(
        std::fs::read(dir.path().join("a/mc.csv")).unwrap(),
        std::fs::read(dir.path().join("b/mc.csv")).unwrap()
    );
    let c = run(dir.path(), &["mc", "--config", &cfg, "--out", "c", "--seed", "5"]);
    assert!(c.status.code().is_some());
    assert_ne!(
        std::fs::read(dir.path().join("a/mc.csv")).unwrap(),
        std::fs::read(dir.path().join("c/mc.csv")).unwrap()
    );
}
